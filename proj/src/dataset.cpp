#include "istsk/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace istsk {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\"");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\"");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

// Accepts anything strtod accepts, including nan/inf; finiteness is checked separately.
std::optional<double> parse_number(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) return std::nullopt;
    return v;
}

std::string where(std::size_t row, std::size_t col) {
    std::ostringstream os;
    os << "row " << row + 1 << ", column " << col + 1;
    return os.str();
}

}  // namespace

Standardization parse_standardization(const std::string& s) {
    if (s == "zscore") return Standardization::zscore;
    if (s == "minmax") return Standardization::minmax;
    if (s == "none") return Standardization::none;
    throw std::invalid_argument("unknown standardization mode: " + s);
}

std::string to_string(Standardization mode) {
    switch (mode) {
        case Standardization::zscore: return "zscore";
        case Standardization::minmax: return "minmax";
        case Standardization::none: return "none";
    }
    return "none";
}

Dataset parse_csv(const std::string& text, const LabelColumn& label_column, std::string name) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
    {
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (lineno == 0 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
                line.erase(0, 3);
            if (trim(line).empty()) {
                ++lineno;
                continue;
            }
            rows.push_back(split_row(line));
            line_numbers.push_back(lineno++);
        }
    }
    if (rows.empty()) throw DatasetError("empty CSV input");

    const std::size_t width = rows.front().size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            std::ostringstream os;
            os << "ragged row " << line_numbers[r] + 1 << ": expected " << width << " cells, got "
               << rows[r].size();
            throw DatasetError(os.str());
        }
    }

    // Resolve a numeric label index up front; a named label needs the header.
    std::optional<std::size_t> label_idx;
    if (const auto* idx = std::get_if<std::size_t>(&label_column)) {
        if (*idx >= width) throw DatasetError("label column index out of range");
        label_idx = *idx;
    }

    bool has_header = false;
    for (std::size_t c = 0; c < width; ++c) {
        if (label_idx && c == *label_idx) continue;
        if (!parse_number(rows.front()[c])) {
            has_header = true;
            break;
        }
    }
    if (const auto* label_name = std::get_if<std::string>(&label_column)) {
        // With a named label the header row may be entirely non-numeric except the label.
        if (!has_header) {
            for (const auto& cell : rows.front())
                if (cell == *label_name) has_header = true;
        }
        if (!has_header) throw DatasetError("label column '" + *label_name + "' needs a header row");
        for (std::size_t c = 0; c < width; ++c)
            if (rows.front()[c] == *label_name) label_idx = c;
        if (!label_idx) throw DatasetError("label column '" + *label_name + "' not found in header");
    }

    const std::size_t first = has_header ? 1 : 0;
    const std::size_t n = rows.size() - first;
    if (n == 0) throw DatasetError("CSV has a header but no data rows");
    const std::size_t d = width - (label_idx ? 1 : 0);
    if (d == 0) throw DatasetError("CSV has no feature columns");

    Dataset ds;
    ds.name = std::move(name);
    ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    if (has_header) {
        for (std::size_t c = 0; c < width; ++c)
            if (!label_idx || c != *label_idx) ds.feature_names.push_back(rows.front()[c]);
    } else {
        for (std::size_t c = 0; c < d; ++c) ds.feature_names.push_back("x" + std::to_string(c));
    }

    std::unordered_map<std::string, int> codes;
    std::vector<int> labels;
    for (std::size_t r = first; r < rows.size(); ++r) {
        const auto i = static_cast<Eigen::Index>(r - first);
        Eigen::Index j = 0;
        for (std::size_t c = 0; c < width; ++c) {
            const auto& cell = rows[r][c];
            if (label_idx && c == *label_idx) {
                if (cell.empty()) throw DatasetError("empty label at " + where(line_numbers[r], c));
                auto [it, inserted] = codes.emplace(cell, static_cast<int>(codes.size()));
                if (inserted) ds.class_names.push_back(cell);
                labels.push_back(it->second);
                continue;
            }
            const auto v = parse_number(cell);
            if (!v) throw DatasetError("cannot parse '" + cell + "' at " + where(line_numbers[r], c));
            if (!std::isfinite(*v))
                throw DatasetError("non-finite value '" + cell + "' at " + where(line_numbers[r], c));
            ds.features(i, j++) = *v;
        }
    }
    if (label_idx) ds.labels = std::move(labels);
    validate(ds);
    return ds;
}

Dataset load_csv(const std::string& path, const LabelColumn& label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), label_column, std::filesystem::path(path).stem().string());
}

void validate(const Dataset& ds) {
    if (ds.samples() < 2) throw DatasetError("dataset needs at least 2 samples");
    if (ds.dims() < 1) throw DatasetError("dataset needs at least 1 feature");
    if (!ds.features.allFinite()) throw DatasetError("dataset contains non-finite values");
    if (ds.labels) {
        if (static_cast<Eigen::Index>(ds.labels->size()) != ds.samples())
            throw DatasetError("label count does not match sample count");
        std::vector<char> seen(ds.class_names.size(), 0);
        for (int id : *ds.labels) {
            if (id < 0 || id >= ds.class_count()) throw DatasetError("label id out of range");
            seen[static_cast<std::size_t>(id)] = 1;
        }
        for (char s : seen)
            if (!s) throw DatasetError("label id without samples");
    }
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& features, Standardization mode) {
    Eigen::MatrixXd out = features;
    const auto n = features.rows();
    switch (mode) {
        case Standardization::none: break;
        case Standardization::zscore:
            for (Eigen::Index j = 0; j < features.cols(); ++j) {
                const double mean = features.col(j).mean();
                const double ss = (features.col(j).array() - mean).square().sum();
                const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
                if (sd > 0.0 && std::isfinite(sd))
                    out.col(j) = (features.col(j).array() - mean) / sd;
                else
                    out.col(j).setZero();
            }
            break;
        case Standardization::minmax:
            for (Eigen::Index j = 0; j < features.cols(); ++j) {
                const double lo = features.col(j).minCoeff();
                const double range = features.col(j).maxCoeff() - lo;
                if (range > 0.0)
                    out.col(j) = (features.col(j).array() - lo) / range;
                else
                    out.col(j).setZero();
            }
            break;
    }
    return out;
}

Dataset standardize(const Dataset& ds, Standardization mode) {
    Dataset out = ds;
    out.features = standardize(ds.features, mode);
    return out;
}

}  // namespace istsk
