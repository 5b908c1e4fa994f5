#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace casp {

/// Compensated accumulator (Kahan with Neumaier's correction). All estimator
/// reductions in this library go through this; tolerance budgets assume it.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double kahan_total(std::span<const double> xs) {
  KahanSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return kahan_total(xs) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
inline double sample_std(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  const double m = mean(xs);
  KahanSum s;
  for (double x : xs) s.add((x - m) * (x - m));
  return std::sqrt(s.value() / static_cast<double>(n - 1));
}

/// Softmax of `scores / temperature`, numerically shifted by the max score.
inline std::vector<double> softmax(std::span<const double> scores, double temperature) {
  std::vector<double> out(scores.size(), 0.0);
  if (scores.empty()) return out;
  const double hi = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp((scores[i] - hi) / temperature);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

/// Shannon entropy in nats; zero entries contribute nothing.
inline double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

/// Index of the largest value; ties resolve to the smallest index.
inline std::size_t argmax_index(std::span<const double> xs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] > xs[best]) best = i;
  }
  return best;
}

/// Runs fn(i) for i in [0, n) across a bounded worker pool. Results must be
/// written to pre-sized slots; the call returns after all workers join, so no
/// synchronization is needed beyond index ownership.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         unsigned threads = 0) {
  if (n == 0) return;
  unsigned workers = threads == 0 ? std::thread::hardware_concurrency() : threads;
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace casp
