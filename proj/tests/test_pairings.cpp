#include "doctest.h"

#include <set>

#include "dualkit/pairings.hpp"

using namespace dualkit;

TEST_CASE("pair registry")
{
  const auto& pairs = pair_registry();
  CHECK(pairs.size() == 16);
  std::set<std::string> ids;
  for (const auto& p : pairs) {
    ids.insert(p.id);
    CHECK_FALSE(p.description.empty());
    CHECK_FALSE(p.theorem.empty());
  }
  CHECK(ids.size() == pairs.size());
  CHECK(ids.count("dykstra-ssc") == 1);
  CHECK(ids.count("admm2-dr") == 1);
  CHECK(find_pair("dykstra-ssc").error_transfer);
  CHECK_THROWS_AS(find_pair("no-such-pair"), Error);
}

TEST_CASE("every pair verifies on a few seeds")
{
  for (const auto& p : pair_registry()) {
    for (std::uint64_t seed : {1, 2, 7}) {
      const DualizationReport rep = verify_pair(p.id, seed, 30, 1e-8);
      CAPTURE(p.id);
      CAPTURE(seed);
      CHECK(rep.pass);
      CHECK(rep.iterations == 30);
      CHECK(rep.max_residual <= 1e-8);
      CHECK(rep.theorem_id == p.theorem);
    }
  }
}

TEST_CASE("a zero tolerance rejects rounding error")
{
  CHECK_FALSE(verify_pair("dykstra-ssc", 1, 30, 0.0).pass);
}

TEST_CASE("pair runs are reproducible")
{
  const PairRun a = run_pair("genpr-ssc", 3, 10);
  const PairRun b = run_pair("genpr-ssc", 3, 10);
  CHECK(to_jsonl(a.primal, false) == to_jsonl(b.primal, false));
  CHECK(to_jsonl(a.dual, false) == to_jsonl(b.dual, false));
}

TEST_CASE("pair runs reject bad arguments")
{
  CHECK_THROWS_AS(run_pair("dykstra-ssc", 1, 0), Error);
  CHECK_THROWS_AS(run_pair("nope", 1, 5), Error);
}

TEST_CASE("error transfer bound holds on the flagged pairs")
{
  for (const auto& p : pair_registry()) {
    if (!p.error_transfer) { continue; }
    for (std::uint64_t seed : {1, 4}) {
      const PairRun run = run_pair(p.id, seed, 30);
      REQUIRE(run.transfer);
      const TransferReport rep = check_error_transfer(run, 400);
      CAPTURE(p.id);
      CAPTURE(seed);
      CHECK(rep.pass);
      CHECK(rep.min_slack >= -1e-9);
      CHECK(rep.slack.size() == 30);
    }
  }
}
