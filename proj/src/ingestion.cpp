#include "rqda/ingestion.h"

#include "rqda/model.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rqda {

namespace {

std::string where(std::size_t row, std::size_t col) {
    return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_label(std::string_view s, int& out) {
    double v = 0.0;
    if (!parse_double(s, v)) return false;
    if (v != std::floor(v) || std::abs(v) > 1e9) return false;
    out = static_cast<int>(v);
    return true;
}

}  // namespace

Index LabeledDataset::count(int label) const {
    const auto it = class_rows.find(label);
    return it == class_rows.end() ? 0 : static_cast<Index>(it->second.size());
}

void LabeledDataset::index_classes(Index min_rows) {
    class_rows.clear();
    for (std::size_t k = 0; k < y.size(); ++k) class_rows[y[k]].push_back(static_cast<Index>(k));
    for (const auto& [label, rows] : class_rows) {
        if (static_cast<Index>(rows.size()) < min_rows) {
            throw InsufficientSamples("dataset: label " + std::to_string(label) + " has " +
                                      std::to_string(rows.size()) + " rows, need at least " +
                                      std::to_string(min_rows));
        }
    }
}

std::vector<std::vector<std::string>> split_csv(const std::string& text, char delimiter) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t quote_line = 0;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        const bool blank = record.size() == 1 && trim(record[0]).empty();
        if (!blank) records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t k = 0; k < text.size(); ++k) {
        const char ch = text[k];
        if (quoted) {
            if (ch == '"') {
                if (k + 1 < text.size() && text[k + 1] == '"') {
                    field.push_back('"');
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && !field_started && trim(field).empty()) {
            field.clear();
            quoted = true;
            field_started = true;
            quote_line = line;
        } else if (ch == delimiter) {
            end_field();
        } else if (ch == '\r' && k + 1 < text.size() && text[k + 1] == '\n') {
            continue;
        } else if (ch == '\n') {
            end_record();
            ++line;
        } else {
            if (field_started && ch != ' ' && ch != '\t') {
                throw ParseError("csv: unexpected character after closing quote on line " +
                                 std::to_string(line));
            }
            field.push_back(ch);
        }
    }
    if (quoted) {
        throw ParseError("csv: unterminated quoted field starting on line " +
                         std::to_string(quote_line));
    }
    if (!field.empty() || !record.empty()) end_record();
    return records;
}

LabeledDataset parse_csv(const std::string& text, const CsvOptions& options) {
    const auto records = split_csv(text, options.delimiter);
    if (records.empty()) throw ParseError("csv: no data");
    const std::size_t width = records.front().size();
    if (width < 2) throw ParseError("csv: need a label column and at least one feature column");

    bool header = false;
    if (options.header) {
        header = *options.header;
    } else {
        double v = 0.0;
        for (const auto& cell : records.front()) {
            if (!parse_double(cell, v)) header = true;
        }
    }

    std::size_t label_col = 0;
    if (const auto* name = std::get_if<std::string>(&options.label_column)) {
        if (!header) throw ParseError("csv: label column '" + *name + "' needs a header row");
        const auto& names = records.front();
        const auto it = std::find_if(names.begin(), names.end(),
                                     [&](const std::string& s) { return trim(s) == *name; });
        if (it == names.end()) throw ParseError("csv: no column named '" + *name + "'");
        label_col = static_cast<std::size_t>(it - names.begin());
    } else {
        const Index idx = std::get<Index>(options.label_column);
        if (idx < 0 || static_cast<std::size_t>(idx) >= width) {
            throw ParseError("csv: label column index " + std::to_string(idx) + " out of range [0, " +
                             std::to_string(width) + ")");
        }
        label_col = static_cast<std::size_t>(idx);
    }

    LabeledDataset ds;
    const std::size_t first = header ? 1 : 0;
    const std::size_t n = records.size() - first;
    if (n == 0) throw ParseError("csv: header but no data rows");
    if (header) {
        for (std::size_t c = 0; c < width; ++c) {
            if (c != label_col) ds.feature_names.emplace_back(trim(records.front()[c]));
        }
    }
    ds.X.resize(static_cast<Index>(n), static_cast<Index>(width - 1));
    ds.y.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& rec = records[first + r];
        const std::size_t row_no = first + r + 1;
        if (rec.size() != width) {
            throw ParseError("csv: row " + std::to_string(row_no) + " has " +
                             std::to_string(rec.size()) + " fields, expected " +
                             std::to_string(width));
        }
        Index out_col = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (trim(rec[c]).empty()) throw ParseError("csv: missing value at " + where(row_no, c + 1));
            if (c == label_col) {
                if (!parse_label(rec[c], ds.y[r])) {
                    throw ParseError("csv: label '" + rec[c] + "' is not an integer at " +
                                     where(row_no, c + 1));
                }
                continue;
            }
            double v = 0.0;
            if (!parse_double(rec[c], v)) {
                throw ParseError("csv: non-numeric value '" + rec[c] + "' at " + where(row_no, c + 1));
            }
            ds.X(static_cast<Index>(r), out_col++) = v;
        }
    }
    if (options.standardize) standardize_columns(ds.X);
    ds.index_classes(1);
    return ds;
}

LabeledDataset load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("load_csv: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_csv(buf.str(), options);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void standardize_columns(Matrix& X) {
    if (X.rows() == 0) return;
    const double n = static_cast<double>(X.rows());
    for (Index c = 0; c < X.cols(); ++c) {
        auto col = X.col(c);
        const double mean = col.mean();
        col.array() -= mean;
        const double var = col.squaredNorm() / n;
        if (var > 0.0) col /= std::sqrt(var);
    }
}

DatasetSplit make_imbalanced_split(const LabeledDataset& ds, const SplitRequest& req) {
    if (req.class_a == req.class_b) throw InvalidArgument("split: the two classes must differ");
    if (!(req.ratio > 0.0) || !std::isfinite(req.ratio)) {
        throw InvalidArgument("split: ratio must be positive");
    }
    if (!(req.test_fraction >= 0.0 && req.test_fraction <= 1.0)) {
        throw InvalidArgument("split: test_fraction must lie in [0, 1]");
    }
    const Index n1 = req.n1;
    const Index n0 = static_cast<Index>(std::floor(req.ratio * static_cast<double>(n1) + 1e-9));
    if (n0 < 2 || n1 < 2) {
        throw InsufficientSamples("split: need at least 2 training rows per class, got n0=" +
                                  std::to_string(n0) + " n1=" + std::to_string(n1));
    }
    const Index avail0 = ds.count(req.class_a);
    const Index avail1 = ds.count(req.class_b);
    if (avail0 < n0 || avail1 < n1) {
        throw InsufficientSamples("split: requested " + std::to_string(n0) + " rows of label " +
                                  std::to_string(req.class_a) + " (available " +
                                  std::to_string(avail0) + ") and " + std::to_string(n1) +
                                  " rows of label " + std::to_string(req.class_b) +
                                  " (available " + std::to_string(avail1) + ")");
    }

    Rng rng(req.seed, 0x5eed);
    auto draw = [&](int label, Index take, std::vector<Index>& train_rows,
                    std::vector<Index>& test_rows) {
        std::vector<Index> rows = ds.class_rows.at(label);
        for (std::size_t k = rows.size(); k > 1; --k) {
            const std::size_t j = static_cast<std::size_t>(rng.next_u64() % k);
            std::swap(rows[k - 1], rows[j]);
        }
        train_rows.assign(rows.begin(), rows.begin() + take);
        const auto rest = static_cast<std::size_t>(rows.size()) - static_cast<std::size_t>(take);
        const auto keep = static_cast<std::size_t>(
            std::floor(req.test_fraction * static_cast<double>(rest) + 1e-9));
        test_rows.assign(rows.begin() + take, rows.begin() + take + static_cast<Index>(keep));
        std::sort(train_rows.begin(), train_rows.end());
        std::sort(test_rows.begin(), test_rows.end());
    };

    DatasetSplit s;
    draw(req.class_a, n0, s.train_rows0, s.test_rows0);
    draw(req.class_b, n1, s.train_rows1, s.test_rows1);
    auto gather = [&](const std::vector<Index>& rows) {
        Matrix out(static_cast<Index>(rows.size()), ds.dim());
        for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = ds.X.row(rows[k]);
        return out;
    };
    s.train = {gather(s.train_rows0), gather(s.train_rows1)};
    s.test0 = gather(s.test_rows0);
    s.test1 = gather(s.test_rows1);
    return s;
}

void write_csv(const std::string& path, const Matrix& X, const std::vector<int>& y) {
    if (static_cast<Index>(y.size()) != X.rows()) {
        throw DimensionMismatch("write_csv: label count does not match row count");
    }
    std::ofstream out(path);
    if (!out) throw InvalidArgument("write_csv: cannot open " + path);
    out.precision(17);
    out << "label";
    for (Index c = 0; c < X.cols(); ++c) out << ",x" << c;
    out << '\n';
    for (Index r = 0; r < X.rows(); ++r) {
        out << y[static_cast<std::size_t>(r)];
        for (Index c = 0; c < X.cols(); ++c) out << ',' << X(r, c);
        out << '\n';
    }
}

}  // namespace rqda
