#ifndef CPDD_DIRECT_HPP
#define CPDD_DIRECT_HPP

/** Direct sparse factorization behind a minimal factor/solve contract.
 *  Backed by Eigen's SparseLU with COLAMD ordering; everything downstream
 *  depends only on the contract (factor once, residual of each solve below
 *  1e-12 relative), not on the backend. */

#include "cpdd/core.hpp"
#include "cpdd/sparse.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <memory>
#include <string>
#include <vector>

namespace cpdd {

inline Eigen::SparseMatrix<double> to_eigen(const SparseOperator& A) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(A.nonzeros());
    for (int i = 0; i < A.rows_built(); ++i) {
        auto cols = A.row_cols(i);
        auto vals = A.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k)
            trip.emplace_back(i, cols[k], vals[k]);
    }
    Eigen::SparseMatrix<double> M(A.rows(), A.cols());
    M.setFromTriplets(trip.begin(), trip.end());
    M.makeCompressed();
    return M;
}

class DirectSolver {
public:
    /** Factor a square matrix; throws DivergenceError with the given label
     *  on a singular pivot (a singular local system signals a broken
     *  transmission setup, not bad user input). */
    void factor(const SparseOperator& A, const std::string& label = "matrix") {
        if (A.rows() != A.cols()) throw InternalError("direct solver needs a square matrix");
        Eigen::SparseMatrix<double> M = to_eigen(A);
        lu_ = std::make_unique<Factorization>();
        lu_->analyzePattern(M);
        lu_->factorize(M);
        if (lu_->info() != Eigen::Success) {
            lu_.reset();
            throw DivergenceError("singular factorization of " + label);
        }
        n_ = A.rows();
    }

    bool factored() const { return lu_ != nullptr; }
    int size() const { return n_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        if (!lu_) throw InternalError("solve called before factor");
        if (b.size() != n_) throw InternalError("direct solve: size mismatch");
        return lu_->solve(b);
    }

private:
    using Factorization =
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;
    std::unique_ptr<Factorization> lu_;  // SparseLU itself is not movable
    int n_ = 0;
};

}  // namespace cpdd

#endif  // CPDD_DIRECT_HPP
