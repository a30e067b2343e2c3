#include <doctest.h>

#include <random>

#include "lipsafe/environments.hpp"
#include "lipsafe/uncertainty.hpp"
#include "test_util.hpp"

using namespace lipsafe;
using testutil::vec1;
using testutil::vec2;

namespace {

struct MuddyFixture {
  StateTable states;
  ActionTable actions;
  KnowledgeSet knowledge;
  UncertaintyMap map;

  MuddyFixture()
      : states(muddy_spec().state_grid.sample()),
        actions(muddy_spec().action_grid.sample()),
        map(states, actions, muddy_spec().lipschitz, knowledge) {}

  StateIndex state_at(double x) {
    auto [idx, fresh] = states.intern(vec1(x));
    REQUIRE_FALSE(fresh);
    return idx;
  }
  ActionIndex action_at(double x) {
    for (std::size_t a = 0; a < actions.size(); ++a)
      if (std::abs(actions.coords(static_cast<ActionIndex>(a))[0] - x) < 1e-9)
        return static_cast<ActionIndex>(a);
    FAIL("action not on the grid");
    return -1;
  }
};

}  // namespace

TEST_CASE("compute_fu: empty knowledge yields the full universe") {
  MuddyFixture fx;
  CHECK(fx.map.compute_fu(0, 0) == fx.map.universe());
  CHECK(fx.map.fu(10, 5).count() == 101);
}

TEST_CASE("compute_fu and the incremental map after one muddy triplet") {
  MuddyFixture fx;
  StateIndex s00 = fx.state_at(0.0);
  StateIndex s10 = fx.state_at(1.0);
  StateIndex s02 = fx.state_at(0.2);
  ActionIndex a10 = fx.action_at(1.0);

  CHECK(fx.map.pair(s02, a10).count == 101);
  auto summary = fx.map.record_transition(s00, a10, s10);
  CHECK(summary.fresh);
  CHECK(summary.removed > 0);

  // known pair collapses to its outcome
  CHECK(fx.map.fu(s00, a10).to_vector() == std::vector<std::size_t>{std::size_t(s10)});

  // neighbouring state: radius L_s * 0.2 = 0.6 around 1.0 -> the 7 grid
  // states 0.4 .. 1.6
  const PairSet& p = fx.map.pair(s02, a10);
  CHECK(p.count == 7);
  std::vector<std::size_t> expected;
  for (double x = 0.4; x <= 1.6 + 1e-9; x += 0.2)
    expected.push_back(static_cast<std::size_t>(fx.state_at(x)));
  CHECK(p.set.to_vector() == expected);
  CHECK(fx.map.compute_fu(s02, a10) == p.set);

  // re-recording a known triplet is a no-op
  auto again = fx.map.record_transition(s00, a10, s10);
  CHECK_FALSE(again.fresh);
  CHECK(again.removed == 0);

  // a conflicting outcome for a known pair is rejected
  CHECK_THROWS_AS(fx.map.record_transition(s00, a10, s02), KnowledgeConflict);
}

TEST_CASE("total uncertainty of the fresh muddy map") {
  MuddyFixture fx;
  CHECK(fx.map.total_uncertainty() == 1234321u);  // 101 * 121 * 101
}

TEST_CASE("total uncertainty equals |S|*|A| when everything is known") {
  std::mt19937_64 rng(3);
  testutil::Instance inst = testutil::random_instance(rng, false, 1.0);
  CHECK(inst.map->total_uncertainty() ==
        inst.states->original_count() * inst.actions->size());
}

TEST_CASE("contradictory observations raise a lipschitz violation") {
  StateTable states({vec1(0.0), vec1(10.0)});
  ActionTable actions({vec1(0.0)});
  KnowledgeSet knowledge;
  UncertaintyMap map(states, actions, LipschitzConstants(0.1, 1.0), knowledge);
  map.record_transition(0, 0, 0);
  // d(f(0), f(10)) = 10 but L_s * 10 = 1: impossible under the constants
  CHECK_THROWS_AS(map.record_transition(1, 0, 1), LipschitzViolation);
}

TEST_CASE("expand_knowledge promotes forced singletons to knowledge") {
  StateTable states({vec1(0.0), vec1(1.0), vec1(2.0)});
  ActionTable actions({vec1(0.0)});
  KnowledgeSet knowledge;
  UncertaintyMap map(states, actions, LipschitzConstants(0.4, 1.0), knowledge);
  map.set_discrete_outcomes(true);

  map.record_transition(0, 0, 1);
  // ball around s1 with radius 0.4 contains only s1 itself, so (s1, a) and
  // then (s2, a) become certain in turn
  CHECK_FALSE(knowledge.contains(1, 0));
  std::size_t added = map.expand_knowledge();
  CHECK(added >= 1);
  REQUIRE(knowledge.contains(1, 0));
  CHECK(*knowledge.outcome(1, 0) == 1);
  CHECK(map.expand_knowledge() == 0);  // closure: second pass adds nothing
  // incremental sets still agree with scratch recomputation after closure
  for (std::size_t s = 0; s < states.original_count(); ++s)
    CHECK(map.fu(static_cast<StateIndex>(s), 0) ==
          map.compute_fu(static_cast<StateIndex>(s), 0));
}

TEST_CASE("incremental map equals scratch recomputation on random instances") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    bool one_d = trial % 2 == 0;
    testutil::Instance inst = testutil::random_instance(rng, one_d);
    for (std::size_t s = 0; s < inst.states->original_count(); ++s)
      for (std::size_t a = 0; a < inst.actions->size(); ++a) {
        CAPTURE(trial);
        CAPTURE(s);
        CAPTURE(a);
        CHECK(inst.map->fu(static_cast<StateIndex>(s), static_cast<ActionIndex>(a)) ==
              inst.map->compute_fu(static_cast<StateIndex>(s), static_cast<ActionIndex>(a)));
      }
  }
}

TEST_CASE("theorem 2: more knowledge only shrinks the sets") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    testutil::Instance inst = testutil::random_instance(rng, trial % 2 == 0, 0.4);
    // snapshot all sets, then record every remaining true triplet
    std::vector<IndexSet> before;
    for (std::size_t s = 0; s < inst.states->original_count(); ++s)
      for (std::size_t a = 0; a < inst.actions->size(); ++a)
        before.push_back(
            inst.map->fu(static_cast<StateIndex>(s), static_cast<ActionIndex>(a)));
    std::size_t prev_total = inst.map->total_uncertainty();

    for (const Triplet& t : inst.unrecorded) {
      inst.map->record_transition(t.s, t.a, t.s_next);
      std::size_t total = inst.map->total_uncertainty();
      CHECK(total <= prev_total);
      prev_total = total;
    }

    std::size_t k = 0;
    for (std::size_t s = 0; s < inst.states->original_count(); ++s)
      for (std::size_t a = 0; a < inst.actions->size(); ++a) {
        const IndexSet& after =
            inst.map->fu(static_cast<StateIndex>(s), static_cast<ActionIndex>(a));
        CHECK(after.is_subset_of(before[k]));
        // the true outcome always survives
        CHECK(after.contains(static_cast<std::size_t>(inst.truth[s][a])));
        ++k;
      }
  }
}

TEST_CASE("a freshly interned state joins exactly the consistent sets") {
  MuddyFixture fx;
  StateIndex s00 = fx.state_at(0.0);
  StateIndex s10 = fx.state_at(1.0);
  ActionIndex a10 = fx.action_at(1.0);
  fx.map.record_transition(s00, a10, s10);

  auto [idx, fresh] = fx.states.intern(vec1(1.53));
  REQUIRE(fresh);
  fx.map.notify_state_added(idx);
  CHECK(fx.map.universe().contains(static_cast<std::size_t>(idx)));

  for (std::size_t s = 0; s < fx.states.original_count(); s += 7)
    for (std::size_t a = 0; a < fx.actions.size(); a += 11) {
      const PairSet& p = fx.map.pair(static_cast<StateIndex>(s), static_cast<ActionIndex>(a));
      bool inside = 1.53 >= p.lo && 1.53 <= p.hi;
      CHECK(p.set.contains(static_cast<std::size_t>(idx)) == inside);
      CHECK(fx.map.compute_fu(static_cast<StateIndex>(s), static_cast<ActionIndex>(a)) ==
            p.set);
    }
}
