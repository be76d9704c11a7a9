#pragma once

#include <cstddef>
#include <vector>

#include "allocrl/rng.hpp"

namespace allocrl {

// One environment step with the observation window flattened row-major
// (oldest row first, most recent last).
struct Transition {
  std::vector<double> state;
  std::vector<double> action;  // raw pre-projection action
  double reward = 0;
  std::vector<double> next_state;
  bool done = false;
};

// Fixed-capacity FIFO store with uniform sampling; a batch never contains the
// same slot twice.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return full_ ? data_.size() : next_; }
  std::size_t capacity() const { return data_.size(); }
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::vector<Transition> data_;
  std::size_t next_ = 0;
  bool full_ = false;
};

// Ornstein-Uhlenbeck process: x += theta * (mu - x) + sigma * z.
class OuNoise {
 public:
  OuNoise(int dim, double theta = 0.15, double sigma = 0.2, double mu = 0.0);
  void reset();
  const std::vector<double>& step(Rng& rng);
  const std::vector<double>& value() const { return x_; }

 private:
  std::vector<double> x_;
  double theta_, sigma_, mu_;
};

// G_t = r_t + gamma * G_{t+1}, one value per reward.
std::vector<double> rewards_to_go(const std::vector<double>& rewards, double gamma);

// Generalized advantage estimation. values carries one bootstrap entry more
// than rewards (values[T] is 0 for terminal trajectories).
// delta_t = r_t + gamma*V_{t+1} - V_t;  A_t = delta_t + gamma*lambda*A_{t+1}.
std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values, double gamma,
                                   double lambda);

}  // namespace allocrl
