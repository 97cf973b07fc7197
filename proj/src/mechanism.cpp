#include "contcount/mechanism.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace contcount {

namespace {

inline std::uint64_t mix(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::size_t NodeIdHash::operator()(const NodeId& id) const {
  return static_cast<std::size_t>(
      mix(id.prefix_bits + 0x9E3779B97F4A7C15ull *
                               static_cast<std::uint64_t>(id.prefix_len)));
}

LeafInterval node_leaf_interval(const NodeId& id, int height) {
  if (id.prefix_len < 1 || id.prefix_len > height) {
    throw std::invalid_argument("node_leaf_interval: prefix_len out of range");
  }
  const std::uint64_t span = std::uint64_t{1} << (height - id.prefix_len);
  const std::uint64_t last = id.prefix_bits * span;
  return LeafInterval{last - span + 1, last};
}

NodeStack::NodeStack(std::size_t dim)
    : dim_(dim), noise_sum_(dim, 0.0), true_count_(dim, 0.0) {
  if (dim == 0) {
    throw std::invalid_argument("NodeStack: dim must be >= 1");
  }
}

std::span<const double> NodeStack::noise_at(std::size_t i) const {
  return std::span<const double>(noise_.data() + i * dim_, dim_);
}

void NodeStack::push(const NodeId& id, double sigma, NoiseSource* source) {
  if (!ids_.empty() && id.prefix_len <= ids_.back().prefix_len) {
    throw std::logic_error(
        "NodeStack::push: new node must be deeper than the current top");
  }
  ids_.push_back(id);
  const std::size_t base = noise_.size();
  noise_.resize(base + dim_, 0.0);
  if (sigma != 0.0 && source != nullptr) {
    for (std::size_t c = 0; c < dim_; ++c) {
      const double n = sigma * source->standard_normal();
      noise_[base + c] = n;
      noise_sum_[c] += n;
    }
  }
  if (instrumented_) {
    if (!seen_.insert(id).second) ++readmissions_;
    admitted_ids_.push_back(id);
    admitted_noise_.insert(admitted_noise_.end(), noise_.begin() + base,
                           noise_.end());
  }
}

void NodeStack::pop_deepest(std::size_t count) {
  if (count > ids_.size()) {
    throw std::logic_error("NodeStack::pop_deepest: popping more than live");
  }
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t base = noise_.size() - dim_;
    for (std::size_t c = 0; c < dim_; ++c) {
      noise_sum_[c] -= noise_[base + c];
    }
    noise_.resize(base);
    ids_.pop_back();
  }
}

void NodeStack::add_to_count(std::span<const double> x) {
  for (std::size_t c = 0; c < dim_; ++c) true_count_[c] += x[c];
}

void NodeStack::write_estimate(std::span<double> out) const {
  for (std::size_t c = 0; c < dim_; ++c) {
    out[c] = true_count_[c] + noise_sum_[c];
  }
}

void NodeStack::enable_instrumentation() { instrumented_ = true; }

std::span<const double> NodeStack::admitted_noise(std::size_t admission) const {
  return std::span<const double>(admitted_noise_.data() + admission * dim_,
                                 dim_);
}

CountingMechanism::CountingMechanism(std::uint64_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim) {
  if (capacity < 1) {
    throw std::invalid_argument("mechanism: capacity must be >= 1");
  }
  if (dim < 1) {
    throw std::invalid_argument("mechanism: dimension must be >= 1");
  }
}

StepCounters CountingMechanism::step_into(std::span<const double> x,
                                          std::span<double> estimate) {
  if (x.size() != dim_) {
    throw std::invalid_argument(
        "step: element dimension " + std::to_string(x.size()) +
        " does not match mechanism dimension " + std::to_string(dim_));
  }
  if (estimate.size() != dim_) {
    throw std::invalid_argument("step: estimate buffer has wrong dimension");
  }
  validate_element(x);
  if (steps_ >= capacity_) {
    throw CapacityError("mechanism capacity exhausted: step " +
                        std::to_string(steps_ + 1) + " exceeds horizon " +
                        std::to_string(capacity_));
  }
  StepCounters counters = do_step(x, estimate);
  ++steps_;
  return counters;
}

MechanismOutput CountingMechanism::step(const StreamElement& x) {
  MechanismOutput out;
  out.estimate.resize(dim_);
  const StepCounters c = step_into(x.value(), out.estimate);
  out.step = c.step;
  out.replacements = c.replacements;
  out.live_nodes = c.live_nodes;
  return out;
}

MechanismOutput CountingMechanism::step(double scalar) {
  return step(StreamElement::scalar(scalar));
}

}  // namespace contcount
