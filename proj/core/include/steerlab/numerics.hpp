#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace steerlab {

// Dense vector of doubles. All arithmetic is elementwise with a fixed
// accumulation order, so results are bit-stable across runs.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  explicit Vec(std::vector<double> data) : data_(std::move(data)) {}
  Vec(std::initializer_list<double> init) : data_(init) {}

  std::size_t dim() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  Vec& operator+=(const Vec& other);
  Vec& operator-=(const Vec& other);
  Vec& operator*=(double s) noexcept;

  // this += s * other
  Vec& axpy(double s, const Vec& other);

  bool all_finite() const noexcept;

  friend bool operator==(const Vec&, const Vec&) = default;

 private:
  std::vector<double> data_;
};

Vec operator+(Vec a, const Vec& b);
Vec operator-(Vec a, const Vec& b);
Vec operator*(Vec a, double s);
Vec operator*(double s, Vec a);
Vec operator-(Vec a);

// Row-major dense matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  Mat transposed() const;
  bool all_finite() const noexcept;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Throws DimensionError unless a.cols() == b.rows().
Mat matmul(const Mat& a, const Mat& b);
// m * v; throws DimensionError unless m.cols() == v.dim().
Vec matvec(const Mat& m, const Vec& v);

double dot(const Vec& a, const Vec& b);
double norm(const Vec& v);
// Throws DimensionError on zero-norm input or mismatched dims.
double cosine(const Vec& a, const Vec& b);

// Max-subtracted softmax. Requires dim >= 1.
Vec softmax(const Vec& v);

// Zero-mean unit-variance normalization without affine parameters.
Vec layer_norm(const Vec& v, double eps = 1e-5);

Vec mean(std::span<const Vec> vs);

// Overflow-safe logistic function.
inline double sigmoid(double x) noexcept {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Deterministic pseudo-random stream: xorshift64* (Vigna 2016, shifts
// 12/25/27, multiplier 0x2545F4914F6CDD1D) whose state is initialised by one
// splitmix64 step of the seed. Normal draws use Box-Muller on two
// consecutive uniforms, no caching, so every draw consumes exactly two words.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 bits of precision.
  double uniform() noexcept;
  double normal() noexcept;
  // Uniform integer in [0, n). Requires n > 0.
  std::size_t below(std::size_t n) noexcept;

  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

RngStream seeded_rng(std::uint64_t seed);

// Derives an independent sub-seed from (seed, stream tag).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

}  // namespace steerlab

