#pragma once

// Thomas algorithm. The implicit steps assemble strictly diagonally dominant
// systems, so no pivoting is needed. The stepper instantiates the long double
// variant: stationary states must be reproduced to well below one double ulp
// per step, or the drift over a long run exceeds the preservation budget.

#include <cmath>
#include <span>
#include <vector>

namespace kvlab {

template <typename Real>
class BasicTridiagSolver {
public:
    /// Solves lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = rhs[i],
    /// writing the solution into rhs. Returns false on a vanishing pivot.
    bool solve(std::span<const Real> lower, std::span<const Real> diag,
               std::span<const Real> upper, std::span<Real> rhs) {
        const std::size_t n = diag.size();
        scratch_.resize(n);
        Real piv = diag[0];
        if (std::fabs(piv) < tiny_) return false;
        rhs[0] /= piv;
        for (std::size_t i = 1; i < n; ++i) {
            scratch_[i] = upper[i - 1] / piv;
            piv = diag[i] - lower[i] * scratch_[i];
            if (std::fabs(piv) < tiny_) return false;
            rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / piv;
        }
        for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch_[i + 1] * rhs[i + 1];
        return true;
    }

private:
    static constexpr Real tiny_ = static_cast<Real>(1e-300);
    std::vector<Real> scratch_;
};

using TridiagSolver = BasicTridiagSolver<double>;

} // namespace kvlab
