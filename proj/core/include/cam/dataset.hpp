#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace cam {

/// n x p observation matrix with column names.
class Dataset {
public:
    Dataset() = default;
    Dataset(Eigen::MatrixXd x, std::vector<std::string> names = {});

    int n() const { return static_cast<int>(x_.rows()); }
    int p() const { return static_cast<int>(x_.cols()); }
    const Eigen::MatrixXd& matrix() const { return x_; }
    Eigen::VectorXd column(int j) const { return x_.col(j); }
    const std::vector<std::string>& names() const { return names_; }

    Dataset subsample_rows(const std::vector<int>& rows) const;

    /// Comma-separated, '\n' newlines; a non-numeric first row is a header.
    static Dataset read_csv(const std::string& path);
    void write_csv(const std::string& path) const;

private:
    Eigen::MatrixXd x_;
    std::vector<std::string> names_;
};

}  // namespace cam
