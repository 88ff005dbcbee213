#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssrnn {

/// Structured error for precondition and data violations. All library
/// errors carry a message naming the offending values.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

using Vec = std::vector<double>;

/// Dense row-major matrix of 64-bit floats.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    bool operator==(const Mat& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
};

inline std::string shape_str(const Mat& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

/// result[i] = sum_j m[i,j] * v[j]
inline Vec matvec(const Mat& m, const Vec& v) {
    if (m.cols != v.size()) {
        throw Error("matvec: dimension mismatch, matrix is " + shape_str(m) +
                    " but vector has length " + std::to_string(v.size()));
    }
    Vec out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        const double* row = m.a.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * v[j];
        out[i] = s;
    }
    return out;
}

/// result[j] = sum_i m[i,j] * v[i], i.e. m^T v without materializing m^T.
inline Vec matvec_transpose(const Mat& m, const Vec& v) {
    if (m.rows != v.size()) {
        throw Error("matvec_transpose: dimension mismatch, matrix is " + shape_str(m) +
                    " but vector has length " + std::to_string(v.size()));
    }
    Vec out(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.a.data() + i * m.cols;
        const double vi = v[i];
        for (std::size_t j = 0; j < m.cols; ++j) out[j] += row[j] * vi;
    }
    return out;
}

/// g += u v^T (rank-one accumulation into an existing matrix).
inline void add_outer(Mat& g, const Vec& u, const Vec& v) {
    if (g.rows != u.size() || g.cols != v.size()) {
        throw Error("add_outer: shape mismatch, target is " + shape_str(g) + " but vectors have lengths " +
                    std::to_string(u.size()) + " and " + std::to_string(v.size()));
    }
    for (std::size_t i = 0; i < g.rows; ++i) {
        double* row = g.a.data() + i * g.cols;
        const double ui = u[i];
        for (std::size_t j = 0; j < g.cols; ++j) row[j] += ui * v[j];
    }
}

/// Column j of m as a vector (embedding lookup).
inline Vec column(const Mat& m, std::size_t j) {
    if (j >= m.cols) {
        throw Error("column: index " + std::to_string(j) + " out of range for " + shape_str(m));
    }
    Vec out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) out[i] = m(i, j);
    return out;
}

inline void add_inplace(Vec& dst, const Vec& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

/// Max-subtracted softmax; output entries are positive and sum to 1.
inline Vec softmax_stable(const Vec& logits) {
    if (logits.empty()) throw Error("softmax_stable: empty input");
    for (double x : logits) {
        if (!std::isfinite(x)) throw Error("softmax_stable: non-finite input entry");
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    Vec out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

/// -log(probs[label]), with the probability clamped below at 1e-300.
inline double cross_entropy(const Vec& probs, std::size_t label) {
    if (label >= probs.size()) {
        throw Error("cross_entropy: label " + std::to_string(label) +
                    " out of range for distribution of size " + std::to_string(probs.size()));
    }
    return -std::log(std::max(probs[label], 1e-300));
}

/// Smallest index attaining the maximum (deterministic tie-break).
inline std::size_t argmax_tiebreak(const Vec& v) {
    if (v.empty()) throw Error("argmax_tiebreak: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

}  // namespace ssrnn
