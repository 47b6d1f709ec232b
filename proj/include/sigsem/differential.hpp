#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigsem/bigstep.hpp"
#include "sigsem/machine.hpp"
#include "sigsem/syntax.hpp"

namespace sigsem {

/// Name pools are x1.., p1.. (persistent signals), o1.. (one-shot signals)
/// and e1.. (exceptions), so generated programs never mix signal kinds.
struct GenParams {
  std::uint32_t max_depth = 4;
  std::uint32_t num_vars = 1;
  std::uint32_t num_signals_per_kind = 1;
  std::uint32_t num_exns = 1;
  std::int64_t literal_lo = 0;
  std::int64_t literal_hi = 1;
  std::uint64_t seed = 0;
};

/// Deterministic in (params, index).
Program gen_program(const GenParams& params, std::uint64_t index);

class CorpusTooLarge : public std::length_error {
 public:
  explicit CorpusTooLarge(std::size_t requested);
};

constexpr std::size_t kMaxCorpusSize = 7;

/// Every command with at most `max_ast_size` nodes over the first name of
/// each pool and the literals in range, smallest first. Variables start at
/// the low end of the literal range.
std::vector<Program> exhaustive_corpus(std::size_t max_ast_size,
                                       const GenParams& pools);

struct DiffReport {
  enum class Verdict { Equal, MissingInMachine, MissingInBigstep, BudgetIncomparable };

  Program program;
  OutcomeSet bigstep_outcomes;
  OutcomeSet machine_outcomes;
  Verdict verdict = Verdict::Equal;
  /// Outcomes found by one side only (BudgetExceeded excluded).
  OutcomeSet only_bigstep;
  OutcomeSet only_machine;

  bool missing() const {
    return verdict == Verdict::MissingInMachine || verdict == Verdict::MissingInBigstep;
  }
};

std::string verdict_name(DiffReport::Verdict v);

/// Exception-priority big-step outcomes against machine outcomes.
DiffReport compare(const Program& program, Budget budget,
                   MachineMutation mutation = MachineMutation::None);

/// Machine audits over every explored transition plus big-step audits over
/// every derivation (at most `derivation_limit` of them when nonzero).
std::vector<AuditViolation> audit_invariants(
    const Program& program, Budget budget,
    MachineMutation mutation = MachineMutation::None,
    std::size_t derivation_limit = 0);

/// Big-step half of `audit_invariants`, for either priority mode.
std::vector<AuditViolation> audit_derivations(const Program& program, Budget budget,
                                              PriorityMode mode,
                                              std::size_t derivation_limit = 0);

/// One JSON object: program, verdict, bigstep_count, machine_count and, on
/// a Missing verdict, witness.
std::string report_line(const DiffReport& report);

/// Reports sorted by rendered program, one line each.
std::string report_jsonl(std::vector<DiffReport> reports);

}  // namespace sigsem
