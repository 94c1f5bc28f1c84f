#pragma once

// Seeded simulation fixtures shared by the causal tests and the acceptance
// suite.

#include <cstdint>

#include "cmvdlm/causal.hpp"
#include "cmvdlm/datagen.hpp"
#include "cmvdlm/io.hpp"

namespace testing {

struct SimStudy {
  cmvdlm::datagen::SimOutput sim;
  cmvdlm::io::PreparedAnalysis prep;
  cmvdlm::causal::CausalRun run;
};

// The damped-trend experiment: q = 4 (C1, C2, E1, E2), r = 0.95, 60 times
// with the intervention at 30, analysed with the default configuration.
inline SimStudy run_sim_study(std::uint64_t seed, int nsamples,
                              const cmvdlm::Vector& shock,
                              cmvdlm::io::RunConfig cfg = {}) {
  SimStudy s;
  cfg.sim.seed = seed;
  cfg.sim.shock = shock;
  cfg.seed = seed;
  cfg.nsamples = nsamples;
  s.sim = cmvdlm::datagen::simulate(cfg.sim);
  s.prep = cmvdlm::io::prepare_analysis(cfg, s.sim.observed, cfg.sim.qc,
                                        cfg.sim.T_intervention);
  s.run = cmvdlm::causal::run_causal(s.prep.spec, s.sim.observed, s.prep.init,
                                     cmvdlm::Rng(seed));
  return s;
}

}  // namespace testing
