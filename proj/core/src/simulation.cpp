#include "fracdim/simulation.hpp"

#include "fracdim/error.hpp"
#include "fracdim/rde.hpp"
#include "fracdim/rough_path.hpp"

namespace fracdim {

namespace {

std::vector<VectorFieldSet> catalog_fields(const ExperimentSpec& spec) {
  std::vector<VectorFieldSet> out;
  for (const auto& name : spec.fields) out.push_back(field_catalog(name, spec.dim));
  return out;
}

} // namespace

Simulator::Simulator(const ExperimentSpec& spec) : Simulator(spec, catalog_fields(spec)) {}

Simulator::Simulator(const ExperimentSpec& spec, std::vector<VectorFieldSet> fields)
    : spec_(spec), fields_(std::move(fields)),
      generator_(spec.generator, spec.grid(), HurstParam(spec.hurst)) {
  validate_spec(spec_);
  for (const auto& f : fields_)
    if (f.dim_noise() != spec_.dim)
      throw InvalidArgument("field set '" + f.name() + "' does not match the driver dimension");
}

SamplePath Simulator::driver(std::size_t member) const {
  return generator_.sample(spec_.dim, spec_.member_seed(member));
}

SamplePath Simulator::solve_driver(const SamplePath& driver, std::size_t field_index) const {
  const VectorFieldSet& fields = field(field_index);
  const SignaturePath lift = lift_path(driver, scheme_depth(spec_.scheme));
  std::vector<double> x0 = spec_.initial_state();
  if (x0.size() != fields.dim_state())
    throw InvalidArgument("initial state does not match field set '" + fields.name() + "'");
  SamplePath sol = solve(fields, x0, lift, {spec_.scheme, 0});
  return SamplePath(sol.grid(), sol.dim(), std::vector<double>(sol.values().begin(), sol.values().end()),
                    driver.hurst(), driver.seed());
}

SamplePath Simulator::solution(std::size_t member, std::size_t field_index) const {
  return solve_driver(driver(member), field_index);
}

} // namespace fracdim
