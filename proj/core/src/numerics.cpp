#include "steerlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "steerlab/error.hpp"

namespace steerlab {

namespace {

void require_same_dim(const Vec& a, const Vec& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw DimensionError(std::string(op) + ": dimension mismatch (" +
                         std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Vec& Vec::operator+=(const Vec& other) {
  require_same_dim(*this, other, "Vec::operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vec& Vec::operator-=(const Vec& other) {
  require_same_dim(*this, other, "Vec::operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vec& Vec::operator*=(double s) noexcept {
  for (double& x : data_) x *= s;
  return *this;
}

Vec& Vec::axpy(double s, const Vec& other) {
  require_same_dim(*this, other, "Vec::axpy");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
  return *this;
}

bool Vec::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Vec operator+(Vec a, const Vec& b) { return a += b; }
Vec operator-(Vec a, const Vec& b) { return a -= b; }
Vec operator*(Vec a, double s) { return a *= s; }
Vec operator*(double s, Vec a) { return a *= s; }
Vec operator-(Vec a) { return a *= -1.0; }

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Mat: data length " + std::to_string(data_.size()) +
                         " != rows*cols " + std::to_string(rows_ * cols_));
  }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Mat: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::transposed() const {
  Mat t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Mat::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Mat out(a.rows(), b.cols());
  // i-k-j nest; each output entry accumulates over k in increasing order.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Vec matvec(const Mat& m, const Vec& v) {
  if (m.cols() != v.dim()) {
    throw DimensionError("matvec: " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                         " * " + std::to_string(v.dim()));
  }
  Vec out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

double dot(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

double cosine(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "cosine");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw DimensionError("cosine: zero-norm input");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Vec softmax(const Vec& v) {
  if (v.empty()) throw DimensionError("softmax: empty input");
  const double mx = *std::max_element(v.data().begin(), v.data().end());
  Vec out(v.dim());
  double total = 0.0;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    out[i] = std::exp(v[i] - mx);
    total += out[i];
  }
  out *= 1.0 / total;
  return out;
}

Vec layer_norm(const Vec& v, double eps) {
  if (v.empty()) throw DimensionError("layer_norm: empty input");
  const double n = static_cast<double>(v.dim());
  double mu = 0.0;
  for (double x : v.data()) mu += x;
  mu /= n;
  double var = 0.0;
  for (double x : v.data()) var += (x - mu) * (x - mu);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  Vec out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = (v[i] - mu) * inv;
  return out;
}

Vec mean(std::span<const Vec> vs) {
  if (vs.empty()) throw DimensionError("mean: no vectors");
  Vec acc(vs.front().dim());
  for (const Vec& v : vs) acc += v;
  acc *= 1.0 / static_cast<double>(vs.size());
  return acc;
}

RngStream::RngStream(std::uint64_t seed) : state_(splitmix64(seed)) {
  if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t RngStream::next_u64() noexcept {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545F4914F6CDD1DULL;
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t RngStream::below(std::size_t n) noexcept {
  return static_cast<std::size_t>(uniform() * static_cast<double>(n));
}

RngStream seeded_rng(std::uint64_t seed) { return RngStream(seed); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return splitmix64(seed ^ splitmix64(tag + 0x632BE59BD9B4E019ULL));
}

}  // namespace steerlab
