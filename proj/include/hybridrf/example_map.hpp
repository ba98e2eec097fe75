#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hybridrf/sampling.hpp"

namespace hybridrf {

// Per-tree map from each training example to its current frontier slot during
// breadth-first growth. Slot and bootstrap weight share one 8-byte record so
// the scan's random lookup touches a single cache line.
class ExampleToNodeMap {
 public:
  static constexpr std::int32_t kTerminal = -1;
  static constexpr std::int32_t kInactive = -2;

  // Deferred (handed to depth-first growth) groups are encoded below kInactive.
  static constexpr std::int32_t deferred_code(std::size_t group) {
    return -3 - static_cast<std::int32_t>(group);
  }
  static constexpr std::size_t deferred_group(std::int32_t code) {
    return static_cast<std::size_t>(-3 - code);
  }
  static constexpr bool is_deferred(std::int32_t code) { return code <= -3; }

  struct Slot {
    std::int32_t node;
    std::uint32_t weight;
  };

  ExampleToNodeMap() = default;
  // Examples with multiplicity > 0 start on slot 0 (the root); the rest are
  // kInactive.
  explicit ExampleToNodeMap(const BootstrapSample& sample);

  std::size_t size() const { return slots_.size(); }
  std::int32_t node(std::size_t example) const { return slots_[example].node; }
  std::uint32_t weight(std::size_t example) const { return slots_[example].weight; }
  const Slot* slot_address(std::size_t example) const { return slots_.data() + example; }
  void assign(std::size_t example, std::int32_t node) { slots_[example].node = node; }

  // Examples currently mapped to a frontier slot, ascending.
  std::span<const std::uint32_t> active() const { return active_; }
  void set_active(std::vector<std::uint32_t> examples) { active_ = std::move(examples); }

  // Total bootstrap weight currently on frontier slots.
  std::uint64_t frontier_weight() const;
  // Total bootstrap weight currently marked terminal.
  std::uint64_t terminal_weight() const;

 private:
  std::vector<Slot> slots_;
  std::vector<std::uint32_t> active_;
};

}  // namespace hybridrf
