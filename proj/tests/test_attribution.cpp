#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "ergmeter/attribution.hpp"
#include "ergmeter/error.hpp"
#include "oracles.hpp"

using namespace ergmeter;
using namespace ergmeter::attribution;

namespace {

template <typename F>
Errc error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no ergmeter::Error thrown";
  return Errc::invalid_argument;
}

scaling::RunRecord full_run(double t_s, double e_j) {
  return scaling::make_run("full", 1, 36, 1, t_s * 1000.0, e_j);
}

}  // namespace

TEST(Attribute, WorkedExample) {
  const std::vector<ComponentShare> shares = {{"A", 0.2}};
  const std::vector<ComponentPowerRef> refs = {{"A", 350.0, "single-component run"}};
  const auto r = attribute(full_run(100.0, 30000.0), shares, refs);
  ASSERT_EQ(r.per_component.size(), 1u);
  EXPECT_NEAR(r.per_component[0].energy_j, 7000.0, 1e-9);
  EXPECT_NEAR(r.per_component[0].energy_fraction, 7000.0 / 30000.0, 1e-12);
  EXPECT_NEAR(r.remainder_j, 23000.0, 1e-9);
  EXPECT_EQ(r.note, kCommunicationsNote);
  ASSERT_EQ(r.provenance.size(), 1u);
}

TEST(Attribute, NoComponents) {
  const auto r = attribute(full_run(10.0, 500.0), {}, {});
  EXPECT_TRUE(r.per_component.empty());
  EXPECT_EQ(r.remainder_j, 500.0);
  EXPECT_EQ(r.remainder_fraction(), 1.0);
}

TEST(Attribute, Errors) {
  const std::vector<ComponentShare> over = {{"A", 0.7}, {"B", 0.6}};
  const std::vector<ComponentPowerRef> refs = {{"A", 1.0, ""}, {"B", 1.0, ""}};
  EXPECT_EQ(error_code_of([&] { attribute(full_run(1.0, 1.0), over, refs); }),
            Errc::shares_exceed_unity);

  const std::vector<ComponentShare> a = {{"A", 0.5}};
  EXPECT_EQ(error_code_of([&] { attribute(full_run(1.0, 1.0), a, {}); }),
            Errc::missing_power_ref);

  const std::vector<ComponentPowerRef> hot = {{"A", 1000.0, ""}};
  EXPECT_EQ(error_code_of([&] { attribute(full_run(1.0, 100.0), a, hot); }),
            Errc::negative_remainder);
}

TEST(Attribute, ShareFromTime) {
  const auto s = share_from_time("X", 25e3, full_run(100.0, 1.0));
  EXPECT_EQ(s.name, "X");
  EXPECT_DOUBLE_EQ(s.time_share, 0.25);
}

TEST(PieData, OneComponent) {
  const std::vector<ComponentShare> shares = {{"A", 0.25}};
  const std::vector<ComponentPowerRef> refs = {{"A", 100.0, ""}};
  const auto slices = pie_data(attribute(full_run(10.0, 1000.0), shares, refs));
  ASSERT_EQ(slices.size(), 2u);
  EXPECT_EQ(slices[0].name, "A");
  EXPECT_DOUBLE_EQ(slices[0].fraction, 0.25);
  EXPECT_EQ(slices[1].name, kRestSlice);
  EXPECT_DOUBLE_EQ(slices[1].fraction, 0.75);
}

TEST(PieData, NoRestWhenFullyAttributed) {
  const std::vector<ComponentShare> shares = {{"A", 0.5}, {"B", 0.5}};
  const std::vector<ComponentPowerRef> refs = {{"A", 100.0, ""}, {"B", 300.0, ""}};
  const auto slices = pie_data(attribute(full_run(10.0, 2000.0), shares, refs));
  ASSERT_EQ(slices.size(), 2u);
  EXPECT_EQ(slices[0].name, "B");
  EXPECT_EQ(slices[1].name, "A");
}

TEST(PieData, WorkedExampleSumsToOne) {
  const std::vector<ComponentShare> shares = {{"A", 0.2}};
  const std::vector<ComponentPowerRef> refs = {{"A", 350.0, ""}};
  const auto slices = pie_data(attribute(full_run(100.0, 30000.0), shares, refs));
  double sum = 0.0;
  for (const auto& s : slices) sum += s.fraction;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

class AttributionProperty : public ::testing::Test {
 protected:
  struct Case {
    scaling::RunRecord run;
    std::vector<ComponentShare> shares;
    std::vector<ComponentPowerRef> refs;
  };

  // Random inputs that keep the remainder non-negative.
  Case random_case() {
    std::uniform_int_distribution<int> n_dist(0, 6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = n_dist(rng_);
    const double t_s = 1.0 + 1e4 * u(rng_);
    const double avg_p = 50.0 + 500.0 * u(rng_);
    Case c{full_run(t_s, avg_p * t_s), {}, {}};
    double budget_share = 1.0;
    double budget_energy = c.run.energy_j;
    for (int i = 0; i < n; ++i) {
      const double share = budget_share * u(rng_) * 0.5;
      const double max_p = budget_energy / (share * t_s + 1e-300);
      const double p = std::min(max_p, 2.0 * avg_p) * (0.01 + 0.98 * u(rng_));
      budget_share -= share;
      budget_energy -= p * share * t_s;
      const std::string name = "c" + std::to_string(i);
      c.shares.push_back({name, share});
      c.refs.push_back({name, p, "ref"});
    }
    return c;
  }

  std::mt19937_64 rng_{37};
};

TEST_F(AttributionProperty, FractionsAndRemainderSumToOne) {
  for (int trial = 0; trial < 10000; ++trial) {
    const auto c = random_case();
    const auto r = attribute(c.run, c.shares, c.refs);
    double sum = r.remainder_fraction();
    double parts = r.remainder_j;
    for (const auto& comp : r.per_component) {
      sum += comp.energy_fraction;
      parts += comp.energy_j;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
    ASSERT_LE(oracle::relative_error(parts, r.total_j), 1e-15);
  }
}

TEST_F(AttributionProperty, HigherPowerImpliesHigherEnergyShare) {
  int checked = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto c = random_case();
    const auto r = attribute(c.run, c.shares, c.refs);
    const double avg = c.run.power_w();
    for (std::size_t i = 0; i < r.per_component.size(); ++i) {
      const auto& comp = r.per_component[i];
      const double p = c.refs[i].avg_power_w;
      if (comp.time_share == 0.0) continue;
      if (p > avg) ASSERT_GT(comp.energy_fraction, comp.time_share);
      if (p < avg) ASSERT_LT(comp.energy_fraction, comp.time_share);
      ++checked;
    }
  }
  EXPECT_GT(checked, 10000);
}

TEST_F(AttributionProperty, LinearInTimeShare) {
  for (int trial = 0; trial < 1000; ++trial) {
    auto c = random_case();
    if (c.shares.empty()) continue;
    c.shares.resize(1);
    c.refs.resize(1);
    const auto base = attribute(c.run, c.shares, c.refs);
    c.shares[0].time_share *= 2.0;
    c.run.energy_j *= 4.0;  // keep the remainder non-negative
    const auto doubled = attribute(c.run, c.shares, c.refs);
    ASSERT_EQ(doubled.per_component[0].energy_j, 2.0 * base.per_component[0].energy_j);
  }
}

TEST(AttributionIo, InputAcceptsTimeMs) {
  const auto j = nlohmann::json::parse(R"({
    "full_run": {"label": "full", "n_nodes": 1, "mpi_tasks": 36, "omp_threads": 1,
                 "cores": 36, "walltime_ms": 100000, "energy_j": 30000},
    "shares": [{"name": "A", "time_ms": 20000}],
    "power_refs": [{"name": "A", "avg_power_w": 350, "provenance": "single-run"}]
  })");
  const auto in = j.get<AttributionInput>();
  ASSERT_EQ(in.shares.size(), 1u);
  EXPECT_DOUBLE_EQ(in.shares[0].time_share, 0.2);
  const auto slices = pie_data(attribute(in.full_run, in.shares, in.power_refs));
  EXPECT_EQ(pie_csv(slices).substr(0, 14), "name,fraction\n");
}
