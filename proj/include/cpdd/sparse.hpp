#ifndef CPDD_SPARSE_HPP
#define CPDD_SPARSE_HPP

/** Row-compressed sparse matrix used for all assembled operators.  Rows are
 *  built in order through a small scratch buffer that merges duplicate
 *  column references; the layout is deterministic for identical input. */

#include "cpdd/core.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace cpdd {

class SparseOperator {
public:
    SparseOperator() = default;
    SparseOperator(int nrows, int ncols) : nrows_(nrows), ncols_(ncols), row_ptr_(1, 0) {
        row_ptr_.reserve(nrows + 1);
    }

    int rows() const { return nrows_; }
    int cols() const { return ncols_; }
    std::int64_t nonzeros() const { return static_cast<std::int64_t>(col_.size()); }
    int rows_built() const { return static_cast<int>(row_ptr_.size()) - 1; }

    /** Append the next row from (col, val) pairs; duplicates are merged and
     *  columns stored in increasing order. */
    void append_row(std::vector<std::pair<int, double>>& scratch) {
        if (rows_built() >= nrows_) throw InternalError("sparse: too many rows appended");
        std::sort(scratch.begin(), scratch.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t k = 0; k < scratch.size(); ++k) {
            const auto& [c, v] = scratch[k];
            if (c < 0 || c >= ncols_) throw InternalError("sparse: column out of range");
            if (k > 0 && scratch[k - 1].first == c) {
                val_.back() += v;
            } else {
                col_.push_back(c);
                val_.push_back(v);
            }
        }
        row_ptr_.push_back(static_cast<std::int64_t>(col_.size()));
        scratch.clear();
    }

    std::span<const int> row_cols(int i) const {
        return {col_.data() + row_ptr_[i], static_cast<std::size_t>(row_ptr_[i + 1] - row_ptr_[i])};
    }
    std::span<const double> row_vals(int i) const {
        return {val_.data() + row_ptr_[i], static_cast<std::size_t>(row_ptr_[i + 1] - row_ptr_[i])};
    }

    double row_sum(int i) const {
        double s = 0;
        for (double v : row_vals(i)) s += v;
        return s;
    }

    /** y = A x. */
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        if (x.size() != ncols_) throw InternalError("sparse apply: size mismatch");
        Eigen::VectorXd y(nrows_);
        for (int i = 0; i < nrows_; ++i) {
            double s = 0;
            for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                s += val_[k] * x[col_[k]];
            y[i] = s;
        }
        return y;
    }

    /** Matrix entries in MatrixMarket coordinate format (1-based, row-major
     *  order), for cross-checks with external tools. */
    void write_matrix_market(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write matrix file: " + path);
        out << "%%MatrixMarket matrix coordinate real general\n";
        out << nrows_ << " " << ncols_ << " " << nonzeros() << "\n";
        char buf[64];
        for (int i = 0; i < rows_built(); ++i) {
            for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                std::snprintf(buf, sizeof buf, "%d %d %.16e\n", i + 1, col_[k] + 1, val_[k]);
                out << buf;
            }
        }
        if (!out) throw IoError("failed while writing matrix file: " + path);
    }

    const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_index() const { return col_; }
    const std::vector<double>& values() const { return val_; }

private:
    int nrows_ = 0, ncols_ = 0;
    std::vector<std::int64_t> row_ptr_;
    std::vector<int> col_;
    std::vector<double> val_;
};

}  // namespace cpdd

#endif  // CPDD_SPARSE_HPP
