#pragma once

#include "rqda/estimation.h"
#include "rqda/types.h"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rqda {

struct LabeledDataset {
    Matrix X;
    std::vector<int> y;
    std::vector<std::string> feature_names;  ///< empty without a header row
    std::map<int, std::vector<Index>> class_rows;

    Index rows() const { return X.rows(); }
    Index dim() const { return X.cols(); }
    Index count(int label) const;
    /// Rebuilds class_rows from y and checks the per-class minimum.
    void index_classes(Index min_rows = 4);
};

/// Label column given by header name or zero-based index.
using ColumnRef = std::variant<std::string, Index>;

struct CsvOptions {
    ColumnRef label_column = Index{0};
    /// Unset means auto-detect: the first row is a header when any of its
    /// cells fails to parse as a number.
    std::optional<bool> header;
    bool standardize = false;
    char delimiter = ',';
};

/// RFC-4180 CSV: quoted fields, doubled quotes, CRLF or LF line endings.
/// Feature cells must be numeric, labels integral. Missing values are an
/// error. Errors carry 1-based row and column numbers.
LabeledDataset load_csv(const std::string& path, const CsvOptions& options = {});
LabeledDataset parse_csv(const std::string& text, const CsvOptions& options = {});

/// Splits RFC-4180 text into records of raw fields.
std::vector<std::vector<std::string>> split_csv(const std::string& text, char delimiter = ',');

/// Per-column z-scoring over every row (constant columns are centered only).
void standardize_columns(Matrix& X);

struct SplitRequest {
    int class_a = 0;    ///< becomes training class 0
    int class_b = 1;    ///< becomes training class 1
    double ratio = 1.0;  ///< n0 / n1
    Index n1 = 0;
    /// Fraction of each class's held-out remainder kept as test data
    /// (1 keeps all of it).
    double test_fraction = 1.0;
    std::uint64_t seed = 1;
};

struct DatasetSplit {
    TrainingSet train;
    Matrix test0;
    Matrix test1;
    std::vector<Index> train_rows0, train_rows1, test_rows0, test_rows1;
};

/// Draws floor(ratio * n1) training rows of class_a and n1 of class_b
/// without replacement; the remaining rows of each class form the test set.
DatasetSplit make_imbalanced_split(const LabeledDataset& ds, const SplitRequest& request);

/// Writes a dataset as CSV with a header (label column first).
void write_csv(const std::string& path, const Matrix& X, const std::vector<int>& y);

}  // namespace rqda
