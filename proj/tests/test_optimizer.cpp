#include <doctest.h>

#include <random>

#include "lipsafe/optimizer.hpp"
#include "test_util.hpp"

using namespace lipsafe;
using testutil::vec1;
using testutil::vec2;

namespace {

SafeSet seed(std::initializer_list<std::size_t> members, std::size_t capacity) {
  SafeSet s;
  s.members = IndexSet(capacity);
  for (std::size_t m : members) s.members.insert(m);
  return s;
}

/// Independent re-enumeration of the greedy selection rule: ascending launch
/// state, ascending action, strict improvement over zero. Mirrors the
/// documented candidate filters so the library's traversal can be checked
/// against a second implementation.
template <typename ScoreFn>
std::optional<Candidate> mirror_greedy(StateIndex current, const SafeSet& safe,
                                       UncertaintyMap& map, ScoreFn score_fn) {
  CertainPaths paths(current, map.knowledge(), map.states().size());
  double best = 0.0;
  std::optional<Candidate> winner;
  for (std::size_t s = 0; s < map.states().size(); ++s) {
    if (!safe.members.contains(s) || !paths.reachable(static_cast<StateIndex>(s)))
      continue;
    map.ensure_row(static_cast<StateIndex>(s));
    for (std::size_t a = 0; a < map.actions().size(); ++a) {
      if (map.knowledge().contains(static_cast<StateIndex>(s),
                                   static_cast<ActionIndex>(a)))
        continue;
      const PairSet& p = map.pair(static_cast<StateIndex>(s), static_cast<ActionIndex>(a));
      if (p.count == 0 || !pair_executable(p, safe)) continue;
      double v = score_fn(static_cast<StateIndex>(s), static_cast<ActionIndex>(a)) /
                 (paths.distance(static_cast<StateIndex>(s)) + 1);
      if (v > best) {
        best = v;
        winner = Candidate{static_cast<StateIndex>(s), static_cast<ActionIndex>(a),
                           *paths.path_to(static_cast<StateIndex>(s)), v};
      }
    }
  }
  return winner;
}

}  // namespace

TEST_CASE("expected_reduction: known pairs score zero") {
  std::mt19937_64 rng(31);
  testutil::Instance inst = testutil::random_instance(rng, true, 0.5);
  for (const Triplet& t : inst.knowledge->triplets())
    CHECK(expected_reduction(t.s, t.a, *inst.map) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("expected_reduction on the two-state toy equals the hand value") {
  StateTable states({vec1(0.0), vec1(1.0)});
  ActionTable actions({vec1(0.0)});
  KnowledgeSet knowledge;
  UncertaintyMap map(states, actions, LipschitzConstants(1.0, 1.0), knowledge);

  // either hypothetical outcome collapses its own pair (2 -> 1 candidates)
  // and leaves the other pair untouched, so the mean reduction is 1
  CHECK(expected_reduction(0, 0, map) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expected_reduction equals the brute-force measure on random instances") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 25; ++trial) {
    testutil::Instance inst = testutil::random_instance(rng, trial % 2 == 0, 0.4);
    for (const Triplet& t : inst.unrecorded) {
      double fast = expected_reduction(t.s, t.a, *inst.map);
      double brute = testutil::brute_delta(t.s, t.a, inst);
      CAPTURE(trial);
      CHECK(fast == doctest::Approx(brute).epsilon(1e-9));
      CHECK(fast >= 0.0);
    }
  }
}

TEST_CASE("optimize_greedily returns nothing when everything is known") {
  std::mt19937_64 rng(41);
  testutil::Instance inst = testutil::random_instance(rng, false, 1.0);
  SafeSet safe;
  safe.members = IndexSet::full(inst.states->size());
  CHECK_FALSE(optimize_greedily(0, safe, *inst.map).has_value());
}

TEST_CASE("optimize_greedily matches an independent enumeration") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 25; ++trial) {
    testutil::Instance inst = testutil::random_instance(rng, trial % 2 == 0, 0.5);
    SafeSet safe;
    safe.members = IndexSet::full(inst.states->size());
    if (inst.states->sorted_1d()) {
      safe.hull_lo = inst.states->coord1(0);
      safe.hull_hi =
          inst.states->coord1(static_cast<StateIndex>(inst.states->size() - 1));
    }

    auto got = optimize_greedily(0, safe, *inst.map);
    auto want = mirror_greedy(0, safe, *inst.map, [&](StateIndex s, ActionIndex a) {
      return expected_reduction(s, a, *inst.map);
    });
    CAPTURE(trial);
    CHECK(got.has_value() == want.has_value());
    if (got && want) {
      CHECK(got->launch_state == want->launch_state);
      CHECK(got->action == want->action);
      CHECK(got->path == want->path);
      CHECK(got->score == doctest::Approx(want->score).epsilon(1e-12));
      // the Eq. (9) constraints hold for the returned candidate
      CHECK(*f_certain(0, got->path, *inst.knowledge) == got->launch_state);
      CHECK(inst.map->fu(got->launch_state, got->action).is_subset_of(safe.members));
      CHECK(got->score >= 0.0);
    }

    // determinism: a second call returns the identical candidate
    auto again = optimize_greedily(0, safe, *inst.map);
    CHECK(got.has_value() == again.has_value());
    if (got && again) {
      CHECK(got->launch_state == again->launch_state);
      CHECK(got->action == again->action);
    }
  }
}

TEST_CASE("expected_expansion: chain where one hypothetical outcome certifies") {
  // 2-D coordinates keep the candidate sets fully discrete
  StateTable states({vec2(0, 0), vec2(2, 0), vec2(4, 0)});
  ActionTable actions({vec1(0.0), vec1(10.0)});
  KnowledgeSet knowledge;
  UncertaintyMap map(states, actions, LipschitzConstants(1.0, 1.0), knowledge);

  // constrains only the a1 column: fu(s1, a1) = {s0, s1}, fu(s2, a1) = all
  map.record_transition(0, 1, 0);
  SafeSet safe = seed({0, 1}, states.size());

  REQUIRE(map.fu(1, 1).to_vector() == std::vector<std::size_t>{0, 1});
  // outcome s0 squeezes fu(s2, a1) to {s0, s1} and certifies s2 (+1);
  // outcome s1 leaves s2 in its own candidate set (no expansion)
  CHECK(expected_expansion(1, 1, map, safe) == doctest::Approx(0.5).epsilon(1e-12));

  // a known pair expands nothing
  CHECK(expected_expansion(0, 1, map, safe) == doctest::Approx(0.0).epsilon(1e-12));

  // with everything already safe no hypothetical outcome can add states
  SafeSet all = seed({0, 1, 2}, states.size());
  CHECK(expected_expansion(1, 1, map, all) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("optimize_expansion matches an independent enumeration") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 15; ++trial) {
    testutil::Instance inst = testutil::random_instance(rng, trial % 2 == 0, 0.5);
    SafeSet safe;
    safe.members = IndexSet::full(inst.states->size());
    if (inst.states->sorted_1d()) {
      safe.hull_lo = inst.states->coord1(0);
      safe.hull_hi =
          inst.states->coord1(static_cast<StateIndex>(inst.states->size() - 1));
    }
    auto got = optimize_expansion(0, safe, *inst.map);
    auto want = mirror_greedy(0, safe, *inst.map, [&](StateIndex s, ActionIndex a) {
      return expected_expansion(s, a, *inst.map, safe);
    });
    CAPTURE(trial);
    CHECK(got.has_value() == want.has_value());
    if (got && want) {
      CHECK(got->launch_state == want->launch_state);
      CHECK(got->action == want->action);
    }
  }
}

TEST_CASE("boundary_seeking_action walks toward the certified edge") {
  // line of five states; safe = {s0, s1, s1b, s2}; the only boundary state is
  // s2 (distance 1 to the nearest unsafe original)
  StateTable states({vec2(0, 0), vec2(1, 0), vec2(2, 1), vec2(2, 0), vec2(3, 0),
                     vec2(4, 0)});
  ActionTable actions({vec1(0.0), vec1(2.0), vec1(4.0)});
  KnowledgeSet knowledge;
  UncertaintyMap map(states, actions, LipschitzConstants(2.0, 1.0), knowledge);

  map.record_transition(0, 0, 1);  // s0 -a0-> s1
  map.record_transition(0, 1, 2);  // s0 -a1-> s1b
  map.record_transition(1, 0, 3);  // s1 -a0-> s2 (onto the boundary)

  SafeSet safe = seed({0, 1, 2, 3}, states.size());
  auto cand = boundary_seeking_action(0, safe, map);
  REQUIRE(cand.has_value());
  CHECK(cand->launch_state == 1);
  CHECK(cand->action == 0);
  CHECK(cand->path == ActionSequence{0});
  CHECK(cand->score == doctest::Approx(0.0).epsilon(1e-9));  // lands exactly on it

  // with every original state safe there is no boundary to seek
  SafeSet everything = seed({0, 1, 2, 3, 4, 5}, states.size());
  CHECK_FALSE(boundary_seeking_action(0, everything, map).has_value());
}

TEST_CASE("boundary_seeking_action breaks ties by the lowest indices") {
  StateTable states({vec2(0, 0), vec2(1, 0), vec2(2, 1), vec2(2, 0), vec2(3, 0),
                     vec2(4, 0)});
  ActionTable actions({vec1(0.0), vec1(2.0)});
  KnowledgeSet knowledge;
  UncertaintyMap map(states, actions, LipschitzConstants(2.0, 1.0), knowledge);

  // two certified actions at s0 whose outcomes are equidistant (1) from the
  // boundary state s2: a0 -> s1, a1 -> s1b
  map.record_transition(0, 0, 1);
  map.record_transition(0, 1, 2);

  SafeSet safe = seed({0, 1, 2, 3}, states.size());
  auto cand = boundary_seeking_action(0, safe, map);
  REQUIRE(cand.has_value());
  CHECK(cand->launch_state == 0);
  CHECK(cand->action == 0);
  CHECK(cand->path.empty());
}
