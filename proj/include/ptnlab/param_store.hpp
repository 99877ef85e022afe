#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptnlab/tensor.hpp"

namespace ptnlab {

struct ParamEntry {
  Tensor value;
  Tensor grad;
  bool frozen = false;
};

/// Named, shaped parameter arrays with gradient buffers. Frozen entries are
/// never touched by an optimizer step. Iteration order is the sorted entry
/// name order, which keeps checkpoints and updates deterministic.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, Tensor init, bool frozen = false) {
    if (entries_.count(name))
      throw std::invalid_argument("params: duplicate entry " + name);
    ParamEntry e;
    e.grad = Tensor::zeros(init.shape);
    e.value = std::move(init);
    e.frozen = frozen;
    return entries_.emplace(name, std::move(e)).first->second.value;
  }

  bool contains(const std::string& name) const {
    return entries_.count(name) != 0;
  }

  ParamEntry& at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw std::out_of_range("params: no entry named " + name);
    return it->second;
  }

  const ParamEntry& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw std::out_of_range("params: no entry named " + name);
    return it->second;
  }

  Tensor& value(const std::string& name) { return at(name).value; }
  const Tensor& value(const std::string& name) const { return at(name).value; }
  Tensor& grad(const std::string& name) { return at(name).grad; }

  void set_frozen(const std::string& name, bool frozen) {
    at(name).frozen = frozen;
  }

  void zero_grads() {
    for (auto& [name, e] : entries_) e.grad.data.setZero();
  }

  void scale_grads(double factor) {
    for (auto& [name, e] : entries_) e.grad.data *= factor;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
  }

  size_t size() const { return entries_.size(); }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, ParamEntry> entries_;
};

/// Vanilla SGD: value -= lr * grad on every non-frozen entry, then all
/// gradients are cleared. A non-finite gradient aborts before any mutation.
void sgd_step(ParameterStore& params, double learning_rate);

}  // namespace ptnlab
