#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

// Small fixed-size linear algebra for 2-d base manifolds: 2-vectors and
// 2x2 matrices for chart data, 3-vectors for embeddings, 4x4 matrices for
// the variational (linearized) flow.

namespace eigengrowth {

struct Vec2 {
    double x = 0.0, y = 0.0;

    double& operator[](std::size_t i) { return i == 0 ? x : y; }
    double operator[](std::size_t i) const { return i == 0 ? x : y; }

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2 operator-() const { return {-x, -y}; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm2(const Vec2& v) { return dot(v, v); }
inline double norm(const Vec2& v) { return std::sqrt(norm2(v)); }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Symmetric or general 2x2 matrix, row major.
struct Mat2 {
    std::array<double, 4> m{0, 0, 0, 0};

    double& operator()(std::size_t i, std::size_t j) { return m[2 * i + j]; }
    double operator()(std::size_t i, std::size_t j) const { return m[2 * i + j]; }

    static Mat2 identity() { return Mat2{{1, 0, 0, 1}}; }
    static Mat2 zero() { return Mat2{}; }

    Mat2 operator+(const Mat2& o) const {
        Mat2 r;
        for (std::size_t i = 0; i < 4; ++i) r.m[i] = m[i] + o.m[i];
        return r;
    }
    Mat2 operator-(const Mat2& o) const {
        Mat2 r;
        for (std::size_t i = 0; i < 4; ++i) r.m[i] = m[i] - o.m[i];
        return r;
    }
    Mat2 operator*(double s) const {
        Mat2 r;
        for (std::size_t i = 0; i < 4; ++i) r.m[i] = m[i] * s;
        return r;
    }
    Vec2 operator*(const Vec2& v) const {
        return {m[0] * v.x + m[1] * v.y, m[2] * v.x + m[3] * v.y};
    }
    Mat2 operator*(const Mat2& o) const {
        Mat2 r;
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j);
        return r;
    }
};

inline Mat2 operator*(double s, const Mat2& a) { return a * s; }

inline double det(const Mat2& a) { return a.m[0] * a.m[3] - a.m[1] * a.m[2]; }

inline Mat2 inverse(const Mat2& a) {
    double d = det(a);
    if (std::abs(d) < 1e-300) throw std::runtime_error("Mat2: singular matrix");
    return Mat2{{a.m[3] / d, -a.m[1] / d, -a.m[2] / d, a.m[0] / d}};
}

inline Mat2 transpose(const Mat2& a) { return Mat2{{a.m[0], a.m[2], a.m[1], a.m[3]}}; }

inline Mat2 outer(const Vec2& a, const Vec2& b) {
    return Mat2{{a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y}};
}

// symmetric positive definite test for metric sanity checks
inline bool positive_definite(const Mat2& g) {
    return g(0, 0) > 0 && det(g) > 0;
}

template <std::size_t N>
struct MatN {
    std::array<double, N * N> m{};

    double& operator()(std::size_t i, std::size_t j) { return m[N * i + j]; }
    double operator()(std::size_t i, std::size_t j) const { return m[N * i + j]; }

    static MatN identity() {
        MatN r;
        for (std::size_t i = 0; i < N; ++i) r(i, i) = 1.0;
        return r;
    }

    MatN operator*(const MatN& o) const {
        MatN r;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t k = 0; k < N; ++k) {
                double a = (*this)(i, k);
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < N; ++j) r(i, j) += a * o(k, j);
            }
        return r;
    }

    std::array<double, N> operator*(const std::array<double, N>& v) const {
        std::array<double, N> r{};
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) r[i] += (*this)(i, j) * v[j];
        return r;
    }
};

using Mat4 = MatN<4>;

// determinant via LU with partial pivoting
template <std::size_t N>
double det(const MatN<N>& a) {
    MatN<N> lu = a;
    double d = 1.0;
    for (std::size_t c = 0; c < N; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < N; ++r)
            if (std::abs(lu(r, c)) > std::abs(lu(p, c))) p = r;
        if (p != c) {
            for (std::size_t j = 0; j < N; ++j) std::swap(lu(p, j), lu(c, j));
            d = -d;
        }
        if (lu(c, c) == 0.0) return 0.0;
        d *= lu(c, c);
        for (std::size_t r = c + 1; r < N; ++r) {
            double f = lu(r, c) / lu(c, c);
            for (std::size_t j = c; j < N; ++j) lu(r, j) -= f * lu(c, j);
        }
    }
    return d;
}

// max |A_ij - B_ij|
template <std::size_t N>
double max_abs_diff(const MatN<N>& a, const MatN<N>& b) {
    double r = 0.0;
    for (std::size_t i = 0; i < N * N; ++i) r = std::max(r, std::abs(a.m[i] - b.m[i]));
    return r;
}

}  // namespace eigengrowth
