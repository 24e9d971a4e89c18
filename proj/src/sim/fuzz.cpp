#include "hush/sim/fuzz.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "hush/sim/leak_scan.hpp"
#include "hush/sim/oracle.hpp"
#include "hush/sim/runner.hpp"

namespace hush::sim {

namespace {

std::string join_names(const std::set<std::string>& names) {
  std::string out = "{";
  for (const auto& n : names) {
    out += (out.size() > 1 ? "," : "") + n;
  }
  return out + "}";
}

// Server-side truth per actor after each step, read through the relay.
struct TruthRecorder {
  const Scenario& scenario;
  std::vector<ShadowState> states;
  ChannelHistory history;
  std::vector<CheckFailure> failures;

  void operator()(const StepView& view) {
    ShadowState state;
    for (std::size_t i = 0; i < scenario.actors.size(); ++i) {
      ShadowUser user;
      if (const auto& sid = view.sessions[i]) {
        const auto* session = view.relay.session(*sid);
        user.connected = session != nullptr;
        if (session != nullptr && session->in_room()) {
          const auto* room = view.relay.room(session->room_id);
          const auto* record = room ? room->room().find(session->user) : nullptr;
          if (record == nullptr) {
            failures.push_back({"invariant", "step " + std::to_string(view.step) + ": session of " +
                                                 scenario.actors[i] + " points at a missing user"});
          } else {
            user.in_room = true;
            user.user_id = record->id.str();
            user.x = record->position.x;
            user.y = record->position.y;
            if (auto c = record->voice_state.channel()) {
              user.channel = c->index;
            }
          }
        }
      }
      state[scenario.actors[i]] = user;
    }
    for (const auto& [id, service] : view.relay.rooms()) {
      if (auto problem = service.room().check_invariants()) {
        failures.push_back({"invariant", "step " + std::to_string(view.step) + ": " + *problem});
      }
      std::size_t members = 0;
      for (const auto& [name, user] : state) {
        members += user.in_room ? 1 : 0;
      }
      if (members != service.room().size()) {
        failures.push_back({"invariant", "step " + std::to_string(view.step) +
                                             ": room holds users without live sessions"});
      }
    }
    const ShadowState& previous = states.empty() ? ShadowState{} : states.back();
    for (const auto& [name, user] : state) {
      auto it = previous.find(name);
      const std::optional<std::int64_t> before = it == previous.end() ? std::nullopt : it->second.channel;
      if (before != user.channel) {
        history.push_back(ChannelAssignment{view.step, name, user.channel});
      }
    }
    states.push_back(std::move(state));
  }
};

using Observed = std::vector<std::tuple<std::size_t, std::string, std::string>>;

Observed non_audio_for(const Transcript& transcript, const std::string& actor) {
  Observed out;
  for (const auto& r : transcript.records) {
    if (r.to == actor && r.kind != "AUDIO") {
      out.emplace_back(r.step, r.kind, r.detail);
    }
  }
  return out;
}

bool is_channel_op(const Op& op) {
  return std::holds_alternative<EnterOp>(op) || std::holds_alternative<ExitOp>(op);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
  bool chance(double p) { return static_cast<double>(engine_() >> 11) * 0x1.0p-53 < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Coordinates on a half-meter grid keep squared distances exact, so the
// boundary case dist == radius is decided identically by every route.
double grid_coordinate(Rng& rng, int half_extent) {
  return static_cast<double>(rng.between(-2 * half_extent, 2 * half_extent)) / 2.0;
}

}  // namespace

std::vector<CheckFailure> check_routing(const Scenario& scenario, const Transcript& transcript,
                                        const ShadowTimeline& timeline, std::size_t* speaks_checked) {
  std::vector<CheckFailure> failures;
  std::vector<std::vector<const DeliveryRecord*>> by_step(scenario.actions.size() + 1);
  for (const auto& r : transcript.records) {
    if (r.step < by_step.size()) {
      by_step[r.step].push_back(&r);
    }
  }
  for (std::size_t step = 0; step < scenario.actions.size(); ++step) {
    const auto& action = scenario.actions[step];
    std::set<std::string> actual;
    for (const auto* r : by_step[step]) {
      if (r->kind != "AUDIO") {
        continue;
      }
      if (r->from != action.actor || !std::holds_alternative<SpeakOp>(action.op)) {
        failures.push_back({"routing", "step " + std::to_string(step) + ": unexpected AUDIO from " + r->from +
                                           " to " + r->to});
        continue;
      }
      if (!actual.insert(r->to).second) {
        failures.push_back({"routing", "step " + std::to_string(step) + ": duplicate AUDIO to " + r->to});
      }
    }
    if (!std::holds_alternative<SpeakOp>(action.op)) {
      continue;
    }
    const auto& before = timeline.before(step);
    std::set<std::string> expected;
    auto it = before.find(action.actor);
    if (it != before.end() && it->second.in_room) {
      expected = oracle_recipients(to_oracle_state(scenario, before), action.actor);
    }
    if (speaks_checked != nullptr) {
      ++*speaks_checked;
    }
    if (actual != expected) {
      failures.push_back({"routing", "step " + std::to_string(step) + ": " + action.actor + " was heard by " +
                                         join_names(actual) + ", oracle says " + join_names(expected)});
    }
  }
  for (const auto* r : by_step[scenario.actions.size()]) {
    if (r->kind == "AUDIO") {
      failures.push_back({"routing", "AUDIO delivered during the final flush"});
    }
  }
  return failures;
}

ScenarioVerdict check_scenario(const Scenario& scenario, const core::Faults& faults) {
  ScenarioVerdict verdict;
  TruthRecorder truth{scenario, {}, {}, {}};
  InProcess mode;
  mode.faults = faults;
  mode.after_step = [&truth](const StepView& view) { truth(view); };
  const Transcript transcript = run_scenario(scenario, mode);
  verdict.failures = truth.failures;

  const ShadowTimeline timeline = replay_shadow(scenario, transcript);
  verdict.steps_checked = timeline.after_step.size();
  for (std::size_t step = 0; step < timeline.after_step.size() && step < truth.states.size(); ++step) {
    if (timeline.after_step[step] != truth.states[step]) {
      verdict.failures.push_back({"state", "step " + std::to_string(step) +
                                               ": server state differs from what its replies imply"});
      break;
    }
  }

  for (auto& f : check_routing(scenario, transcript, timeline, &verdict.speaks_checked)) {
    verdict.failures.push_back(std::move(f));
  }

  const LeakReport leaks = leak_scan(transcript, truth.history);
  verdict.records_scanned = leaks.scanned;
  for (const auto& v : leaks.violations) {
    verdict.failures.push_back({"leak", "record " + std::to_string(v.offset) + " to " + v.recipient + " (" +
                                            v.kind + "): " + v.reason});
  }

  // Other actors' channel moves may change which AUDIO frames an actor gets,
  // and nothing else.
  for (const auto& observer : scenario.actors) {
    InProcess variant;
    variant.faults = faults;
    variant.skip = [&observer](const ScriptAction& a) { return a.actor != observer && is_channel_op(a.op); };
    const Transcript counterfactual = run_scenario(scenario, variant);
    if (non_audio_for(transcript, observer) != non_audio_for(counterfactual, observer)) {
      verdict.failures.push_back({"independence", observer +
                                                      "'s non-audio deliveries depend on other actors' channels"});
    }
  }
  return verdict;
}

Scenario generate_scenario(std::uint64_t seed, const FuzzBounds& bounds) {
  Rng rng(seed);
  Scenario s;
  s.seed = seed;
  const int users = rng.between(2, std::max(2, bounds.max_users));
  for (int i = 0; i < users; ++i) {
    s.actors.push_back(std::string(1, static_cast<char>('A' + i)));
  }
  s.config.num_channels = rng.between(1, std::max(1, bounds.max_channels));
  s.config.max_users = rng.chance(0.6) ? users : rng.between(2, users);
  s.config.hearing_radius = 25.0;

  const int actions = rng.between(5, std::max(5, bounds.max_actions));
  std::int64_t t = 0;
  std::vector<int> spoken(static_cast<std::size_t>(users), 0);
  for (int i = 0; i < actions; ++i) {
    t += rng.chance(0.25) ? 0 : rng.between(1, 120);
    ScriptAction a;
    a.t_ms = t;
    // Early on, mostly joins so rooms fill up.
    const std::size_t actor = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(users)));
    a.actor = s.actors[actor];
    const double roll = static_cast<double>(rng.below(1000)) / 1000.0;
    const double join_weight = i < users ? 0.6 : 0.1;
    if (roll < join_weight) {
      a.op = JoinRoomOp{};
    } else if (roll < join_weight + 0.18) {
      if (rng.chance(0.2)) {
        a.op = MoveOp{rng.chance(0.5) ? 1000.0 : -1000.0, grid_coordinate(rng, 5)};
      } else if (rng.chance(0.15)) {
        // Exactly on the hearing boundary relative to the spawn point.
        static constexpr double kBoundary[][2] = {{25, 0}, {-25, 0}, {0, 25}, {15, 20}, {-20, -15}, {7, 24}};
        const auto& p = kBoundary[rng.below(6)];
        a.op = MoveOp{p[0], p[1]};
      } else {
        a.op = MoveOp{grid_coordinate(rng, 40), grid_coordinate(rng, 40)};
      }
    } else if (roll < join_weight + 0.43) {
      a.op = SpeakOp{a.actor + "-" + std::to_string(++spoken[actor])};
    } else if (roll < join_weight + 0.63) {
      std::int64_t channel = rng.between(1, s.config.num_channels);
      if (rng.chance(0.08)) {
        channel = rng.chance(0.5) ? 0 : s.config.num_channels + 1;
      }
      a.op = EnterOp{channel};
    } else if (roll < join_weight + 0.75) {
      a.op = ExitOp{};
    } else if (roll < join_weight + 0.80) {
      a.op = DisconnectOp{};
    } else {
      a.op = SpeakOp{a.actor + "-" + std::to_string(++spoken[actor])};
    }
    s.actions.push_back(std::move(a));
  }
  return s;
}

Scenario shrink(const Scenario& failing, const std::function<bool(const Scenario&)>& still_fails) {
  Scenario current = failing;
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t i = current.actions.size(); i-- > 0;) {
      Scenario candidate = current;
      candidate.actions.erase(candidate.actions.begin() + static_cast<std::ptrdiff_t>(i));
      if (still_fails(candidate)) {
        current = std::move(candidate);
        progress = true;
      }
    }
  }
  Scenario trimmed = current;
  std::erase_if(trimmed.actors, [&trimmed](const std::string& name) {
    return std::none_of(trimmed.actions.begin(), trimmed.actions.end(),
                        [&name](const ScriptAction& a) { return a.actor == name; });
  });
  return still_fails(trimmed) ? trimmed : current;
}

FuzzSummary fuzz(const FuzzOptions& options) {
  FuzzSummary summary;
  for (std::size_t i = 0; i < options.count; ++i) {
    const Scenario scenario = generate_scenario(mix(options.seed * 0x100000001B3ULL + i), options.bounds);
    const ScenarioVerdict verdict = check_scenario(scenario, options.faults);
    ++summary.run;
    summary.speaks_checked += verdict.speaks_checked;
    summary.records_scanned += verdict.records_scanned;
    if (verdict.passed()) {
      ++summary.passed;
      continue;
    }
    FuzzFailure failure;
    failure.index = i;
    failure.original = scenario;
    failure.failures = verdict.failures;
    failure.minimal = shrink(scenario, [&options](const Scenario& candidate) {
      return !check_scenario(candidate, options.faults).passed();
    });
    if (options.failure_dir) {
      std::filesystem::create_directories(*options.failure_dir);
      auto path = *options.failure_dir /
                  ("fuzz-failure-" + std::to_string(options.seed) + "-" + std::to_string(i) + ".json");
      save_scenario(path, failure.minimal);
      failure.written = path;
    }
    summary.failures.push_back(std::move(failure));
    if (options.stop_on_failure) {
      break;
    }
  }
  return summary;
}

}  // namespace hush::sim
