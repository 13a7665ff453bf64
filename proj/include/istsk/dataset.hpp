#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace istsk {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tabular data: an N x d feature matrix with optional dense 0-based class ids.
struct Dataset {
    Eigen::MatrixXd features;
    std::optional<std::vector<int>> labels;
    std::vector<std::string> class_names;  // token for each label id, first-appearance order
    std::vector<std::string> feature_names;
    std::string name;

    Eigen::Index samples() const { return features.rows(); }
    Eigen::Index dims() const { return features.cols(); }
    int class_count() const { return static_cast<int>(class_names.size()); }
};

/// Label column selector: none, a 0-based index, or a header name.
using LabelColumn = std::variant<std::monostate, std::size_t, std::string>;

enum class Standardization { zscore, minmax, none };

Standardization parse_standardization(const std::string& s);
std::string to_string(Standardization mode);

/// Parses CSV text. A header row is detected when some cell of the first row
/// (other than the label cell) is not a number.
Dataset parse_csv(const std::string& text, const LabelColumn& label_column = {},
                  std::string name = {});

Dataset load_csv(const std::string& path, const LabelColumn& label_column = {});

/// Throws DatasetError unless N >= 2, d >= 1, all entries finite, and every
/// label id in 0..K-1 occurs.
void validate(const Dataset& ds);

Eigen::MatrixXd standardize(const Eigen::MatrixXd& features, Standardization mode);
Dataset standardize(const Dataset& ds, Standardization mode);

}  // namespace istsk
