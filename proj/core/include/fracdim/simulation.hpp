#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fracdim/experiment_spec.hpp"
#include "fracdim/fbm.hpp"
#include "fracdim/vector_fields.hpp"

namespace fracdim {

/// Ensemble members of an experiment: member i is driven by the fBm drawn
/// with seed base_seed + i, lifted and solved for each configured field set.
/// Every member is a pure function of (spec, i), so members can be produced
/// on any thread in any order.
class Simulator {
public:
  explicit Simulator(const ExperimentSpec& spec);
  Simulator(const ExperimentSpec& spec, std::vector<VectorFieldSet> fields);

  const ExperimentSpec& spec() const noexcept { return spec_; }
  std::size_t field_count() const noexcept { return fields_.size(); }
  const VectorFieldSet& field(std::size_t k) const { return fields_.at(k); }

  /// The fBm driver of a member, tagged with H and its seed.
  SamplePath driver(std::size_t member) const;
  /// Solution path of a member for field set k, tagged like its driver.
  SamplePath solution(std::size_t member, std::size_t field_index) const;
  SamplePath solve_driver(const SamplePath& driver, std::size_t field_index) const;

private:
  ExperimentSpec spec_;
  std::vector<VectorFieldSet> fields_;
  FbmGenerator generator_;
};

} // namespace fracdim
