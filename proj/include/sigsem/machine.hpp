#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sigsem/bigstep.hpp"
#include "sigsem/store.hpp"
#include "sigsem/syntax.hpp"

namespace sigsem {

/// Entry of the tag stack J: ⟨e,h⟩, ⟨z,h⟩ or ⟨z,h,u⟩.
struct Tag {
  enum class Kind { Exn, Per, Once };

  Kind kind = Kind::Exn;
  std::string name;
  CommandPtr handler;
  bool used = false;
  /// Distinct among the tags and pop-upd frames alive when it is pushed.
  /// Not part of the machine proper; the audits use it to tell tags with
  /// the same name apart.
  std::uint32_t id = 0;
  /// Number of times this tag's handler has fired (audit shadow state).
  std::uint32_t fires = 0;

  static Tag exn(std::string e, CommandPtr h) {
    return {Kind::Exn, std::move(e), std::move(h), false, 0, 0};
  }
  static Tag per(std::string z, CommandPtr h) {
    return {Kind::Per, std::move(z), std::move(h), false, 0, 0};
  }
  static Tag once(std::string z, CommandPtr h, bool used = false) {
    return {Kind::Once, std::move(z), std::move(h), used, 0, 0};
  }

  bool is_signal() const { return kind != Kind::Exn; }
};

/// Continuation entry, also used for the item under evaluation.
struct Frame {
  enum class Kind { Cmd, PopUpd, Upd, Ret };

  Kind kind = Kind::Ret;
  CommandPtr command;
  BitVector beta;
  /// For PopUpd: id of the tag it discharges (audit annotation).
  std::uint32_t scope_id = 0;

  static Frame cmd(CommandPtr c) { return {Kind::Cmd, std::move(c), {}, 0}; }
  static Frame pop_upd(BitVector b, std::uint32_t scope = 0) {
    return {Kind::PopUpd, nullptr, std::move(b), scope};
  }
  static Frame upd(BitVector b) { return {Kind::Upd, nullptr, std::move(b), 0}; }
  static Frame ret() { return {}; }
};

/// ⟨current, s, β, J, K⟩ with J and K listed top first.
struct Config {
  Frame current;
  State state;
  BitVector beta;
  std::vector<Tag> j;
  std::vector<Frame> k;

  static Config initial(const Program& program);
  static Config initial(CommandPtr command, State state);

  bool is_final() const {
    return current.kind == Frame::Kind::Ret && k.empty();
  }
};

/// Equality on everything the machine reads; commands compare by identity.
bool operator==(const Config& a, const Config& b);
std::size_t hash_value(const Config& c);

struct MachineChoice {
  enum class Kind { Structural, FirePersistent, FireOnce };

  Kind kind = Kind::Structural;
  std::string signal;

  static MachineChoice structural() { return {}; }
  static MachineChoice fire_per(std::string z) {
    return {Kind::FirePersistent, std::move(z)};
  }
  static MachineChoice fire_once(std::string z) {
    return {Kind::FireOnce, std::move(z)};
  }

  /// `structural`, `fire-per z`, `fire-once z`: the schedule file syntax.
  std::string to_string() const;
  friend bool operator==(const MachineChoice&, const MachineChoice&) = default;
};

struct MachineResult {
  enum class Kind { Finished, StuckUncaught, BudgetExceeded };

  Kind kind = Kind::Finished;
  std::string exn;
  State state;

  static MachineResult finished(State s) { return {Kind::Finished, {}, std::move(s)}; }
  static MachineResult stuck(std::string e, State s) {
    return {Kind::StuckUncaught, std::move(e), std::move(s)};
  }
  static MachineResult budget_exceeded() { return {Kind::BudgetExceeded, {}, {}}; }

  Outcome to_outcome() const;
  std::string to_string() const;
  friend bool operator==(const MachineResult&, const MachineResult&) = default;
};

/// Deliberate defects used to check that the audits notice broken machines.
enum class MachineMutation {
  None,
  SkipUsedBitFlip,         // one-shot firing leaves u at 0
  SkipPopUpdOnExit,        // pop-upd restores β but leaves J alone
  HandlerUnderCallerBeta,  // handlers run under the interrupted β
  SkipUnwindTagPop,        // unwind removes only the matching exception tag
};

class InvalidChoice : public std::invalid_argument {
 public:
  InvalidChoice(std::size_t step_index, const MachineChoice& choice);
  std::size_t step_index() const { return step_index_; }

 private:
  std::size_t step_index_;
};

std::vector<MachineChoice> enabled_choices(const Config& config);

using StepResult = std::variant<Config, MachineResult>;

/// One transition. Throws InvalidChoice (step index 0) when `choice` is
/// not enabled.
StepResult step(const Config& config, const MachineChoice& choice,
                MachineMutation mutation = MachineMutation::None);

struct Unwound {
  CommandPtr handler;
  BitVector beta;
  std::vector<Tag> j;
  std::vector<Frame> k;
};

/// Nullopt is NoHandler.
std::optional<Unwound> unwind(const std::string& exn, const std::vector<Tag>& j,
                              const std::vector<Frame>& k,
                              MachineMutation mutation = MachineMutation::None);

/// 64 × size × (max_iters + 1) × (handler_fuel + 1).
std::size_t step_bound(const Command& command, Budget budget);

struct MachineRun {
  MachineResult result;
  std::vector<Config> trace;  // initial configuration first
};

/// Follows `schedule`, then Structural until the run ends or the step bound
/// is reached. InvalidChoice carries the failing step index.
MachineRun run(const Program& program, const std::vector<MachineChoice>& schedule,
               Budget budget, MachineMutation mutation = MachineMutation::None);

/// Violation found while exploring machine runs, with the schedule that
/// reaches the offending step.
struct AuditViolation {
  std::string kind;
  std::string detail;
  std::string witness;

  std::string to_string() const;
};

struct Exploration {
  OutcomeSet outcomes;
  std::vector<AuditViolation> violations;
  std::size_t configs = 0;
};

/// Every run with at most handler_fuel Fire steps, depth first. With
/// `audit`, every transition taken is checked against the stack, masking,
/// one-shot and scope invariants.
Exploration explore_machine(const Program& program, Budget budget,
                            MachineMutation mutation = MachineMutation::None,
                            bool audit = false);

OutcomeSet enumerate_machine(const Program& program, Budget budget,
                             MachineMutation mutation = MachineMutation::None);

std::string tag_to_string(const Tag& t);
std::string frame_to_string(const Frame& f);
/// `step: <current | state | beta | J | K>`
std::string config_to_string(const Config& c, std::size_t step);

}  // namespace sigsem
