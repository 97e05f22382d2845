// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <sstream>

#include "types.hpp"

namespace cfaging {

inline CMat hermitian_part(const CMat& m) { return 0.5 * (m + m.adjoint()); }

inline double real_trace(const CMat& m) { return m.trace().real(); }

inline double min_eigenvalue(const CMat& hermitian) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Eigenvalue clipping at zero. Returns the projected matrix.
inline CMat clip_psd(const CMat& hermitian) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(hermitian));
    RVec ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

/// Symmetric square root S = V diag(sqrt(lambda)) V^H of a Hermitian PSD
/// matrix, so that S * S^H = R. Works for rank-deficient R (pure LoS
/// links have R = 0).
inline CMat psd_sqrt(const CMat& r) {
    if (r.rows() != r.cols()) throw ContractError("psd_sqrt: matrix is not square");
    if (r.size() == 0) return r;
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(r));
    const RVec& ev = es.eigenvalues();
    const double tr = std::max(real_trace(r), 0.0);
    if (ev.minCoeff() < -1e-8 * tr) {
        std::ostringstream os;
        os << "psd_sqrt: eigenvalue " << ev.minCoeff() << " below tolerance (trace " << tr << ")";
        throw NumericalError(os.str());
    }
    RVec root = ev.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

inline double condition_number(const CMat& hermitian) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(hermitian), Eigen::EigenvaluesOnly);
    const RVec& ev = es.eigenvalues();
    const double lo = ev.cwiseAbs().minCoeff();
    return lo == 0.0 ? std::numeric_limits<double>::infinity() : ev.cwiseAbs().maxCoeff() / lo;
}

/// Solves H X = B for Hermitian positive definite H via Cholesky.
inline CMat hermitian_solve(const CMat& h, const CMat& b, const char* what = "hermitian_solve") {
    Eigen::LLT<CMat> llt(hermitian_part(h));
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << what << ": matrix is not positive definite (condition number "
           << condition_number(h) << ")";
        throw NumericalError(os.str());
    }
    return llt.solve(b);
}

inline CMat hermitian_inverse(const CMat& h, const char* what = "hermitian_inverse") {
    return hermitian_part(hermitian_solve(h, CMat::Identity(h.rows(), h.cols()), what));
}

}  // namespace cfaging
