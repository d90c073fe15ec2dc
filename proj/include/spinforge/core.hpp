// Copyright 2026 The Spinforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace spinforge {

inline constexpr const char* kVersion = "0.3.1";

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double max_abs(const Matrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool is_power_of_two(long n) { return n > 0 && (n & (n - 1)) == 0; }

enum class Kind { hermitian, unitary, general };

inline const char* kind_name(Kind k) {
    switch (k) {
    case Kind::hermitian: return "hermitian";
    case Kind::unitary: return "unitary";
    default: return "general";
    }
}

/// Dense 2^q square matrix with a tag. Tagged factories validate.
class Operator {
public:
    Operator() = default;

    static Operator general(Matrix m) { return Operator(std::move(m), Kind::general); }

    /// Hermiticity is checked relative to the largest entry so that
    /// Hamiltonians in rad/s pass as readily as spin operators.
    static Operator hermitian(Matrix m) {
        Operator op(std::move(m), Kind::hermitian);
        const double scale = std::max(1.0, max_abs(op.m_));
        const double dev = max_abs(op.m_ - op.m_.adjoint());
        if (dev > 1e-12 * scale) {
            throw Error("operator is not hermitian (max |A-A^+| = " + std::to_string(dev) + ")");
        }
        return op;
    }

    static Operator unitary(Matrix m) {
        Operator op(std::move(m), Kind::unitary);
        const auto d = op.m_.rows();
        const double dev = max_abs(op.m_.adjoint() * op.m_ - Matrix::Identity(d, d));
        if (dev > 1e-10) {
            throw Error("operator is not unitary (max |U^+U-1| = " + std::to_string(dev) + ")");
        }
        return op;
    }

    static Operator identity(long dim) { return unitary(Matrix::Identity(dim, dim)); }

    long dim() const { return m_.rows(); }
    Kind kind() const { return kind_; }
    const Matrix& matrix() const { return m_; }
    cplx operator()(long r, long c) const { return m_(r, c); }

    Operator adjoint() const { return Operator(m_.adjoint(), kind_); }

private:
    Operator(Matrix m, Kind k) : m_(std::move(m)), kind_(k) {
        if (m_.rows() != m_.cols()) throw Error("operator must be square");
        if (!is_power_of_two(m_.rows())) throw Error("operator dimension must be a power of two");
    }

    Matrix m_;
    Kind kind_ = Kind::general;
};

inline void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) +
                    " vs " + std::to_string(b.rows()) + ")");
    }
}

inline unsigned& thread_count_ref() {
    static unsigned n = 1;
    return n;
}

inline void set_threads(unsigned n) { thread_count_ref() = n == 0 ? 1 : n; }
inline unsigned threads() { return thread_count_ref(); }

/// Runs fn(i) for i in [0, n). Work is split in contiguous blocks so that
/// results written by index stay in a fixed order.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t t = std::min<std::size_t>(threads(), n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(t);
    const std::size_t chunk = (n + t - 1) / t;
    for (std::size_t w = 0; w < t; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

} // namespace spinforge
