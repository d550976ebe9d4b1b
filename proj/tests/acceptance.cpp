// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include "bds/acquisition.hpp"
#include "bds/curriculum.hpp"
#include "bds/gp.hpp"
#include "bds/harness.hpp"
#include "bds/optimize.hpp"
#include "bds/rewards.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;
using bds::Vector;
using bds::rng::Tag;
using Clock = std::chrono::steady_clock;

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

void gp_correctness() {
  const auto start = Clock::now();
  auto gen = bds::rng::stream(1001, Tag::kTest, 0);
  std::uniform_int_distribution<int> dim(1, 6), outs(1, 3), count(1, 40);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const int d = dim(gen), m = outs(gen), n = count(gen);
    const Vector lo = oracle::uniform(gen, d, -2, 2);
    const bds::BoxBounds box(lo, lo + oracle::uniform(gen, d, 0.5, 3));
    const Vector flo = oracle::uniform(gen, m, -1, 0), fhi = flo + oracle::uniform(gen, m, 0.5, 2);
    const bds::KernelParams p{std::exp(oracle::uniform(gen, 1, -1, 1)[0]), oracle::uniform(gen, d, 0.5, 5)};
    const double eta = oracle::uniform(gen, 1, 0.05, 0.5)[0];
    bds::GpModel gp(box, flo, fhi, p, eta);
    std::vector<Vector> ux, fs_;
    for (int i = 0; i < n; ++i) {
      ux.push_back(oracle::uniform(gen, d));
      fs_.push_back(oracle::uniform(gen, m, -2, 2));
      gp.add_observation(box.from_unit(ux.back()), fs_.back());
    }
    for (int q = 0; q < 5; ++q) {
      const Vector u = oracle::uniform(gen, d);
      const auto got = gp.posterior(box.from_unit(u));
      const auto want = oracle::gp_posterior(ux, fs_, 0.5 * (flo + fhi), p.theta, p.lambda, eta, u);
      for (int o = 0; o < m; ++o)
        worst = std::max({worst, std::abs(got.mean[o] - want.mean[o]), std::abs(got.variance[o] - want.variance)});
    }
  }
  const double t = seconds_since(start);
  verdict(1, worst <= 1e-8 && t < 10.0, fmt("max deviation %.2e over 200 datasets in %.2f s", worst, t));
}

void kernel_identity() {
  auto gen = bds::rng::stream(1002, Tag::kTest, 0);
  bool exact = true;
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = 1 + rep % 6;
    const Vector x = oracle::uniform(gen, d, -5, 5);
    const double theta = std::exp(oracle::uniform(gen, 1, -5, 5)[0]);
    exact &= bds::matern52(x, x, {theta, oracle::uniform(gen, d, 0.01, 100)}) == theta;
  }
  std::uniform_int_distribution<int> dim(1, 6), count(2, 40);
  int ok = 0;
  double max_jitter_ratio = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = dim(gen), n = count(gen);
    bds::Matrix pts(n, d);
    for (int i = 0; i < n; ++i) pts.row(i) = oracle::uniform(gen, d).transpose();
    const bds::KernelParams p{std::exp(oracle::uniform(gen, 1, -3, 3)[0]), oracle::uniform(gen, d, 0.01, 100)};
    try {
      const auto f = bds::detail::factorize(bds::detail::gram(pts, p), p.theta);
      max_jitter_ratio = std::max(max_jitter_ratio, f.jitter / p.theta);
      if (f.jitter <= 1e-8 * p.theta) ++ok;
    } catch (const bds::SurrogateError&) {
    }
  }
  verdict(2, exact && ok == 1000,
          std::string("k(x,x) == theta exactly: ") + (exact ? "yes" : "no") +
              fmt("; %g/1000 Gram matrices factorized, max jitter %.1e theta", ok, max_jitter_ratio));
}

void acquisition_agreement() {
  auto gen = bds::rng::stream(1003, Tag::kTest, 0);
  int within = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> obs;
    for (int i = 0; i < 1 + rep % 5; ++i) obs.push_back(oracle::uniform(gen, 1, -2, 2)[0]);
    std::vector<Vector> observed;
    for (double o : obs) observed.push_back(Vector::Constant(1, o));
    const double mu = oracle::uniform(gen, 1, -2, 2)[0], sd = oracle::uniform(gen, 1, 0.05, 2)[0];
    const bds::PosteriorEstimate post{Vector::Constant(1, mu), Vector::Constant(1, sd * sd)};
    const auto mc = bds::diversity_value_mc(post, observed, bds::FeatureMetric::euclidean(),
                                            bds::AcquisitionConfig{10000, 0.0, static_cast<std::uint64_t>(rep)});
    if (std::abs(mc.value - oracle::expected_min_distance_1d(mu, sd, obs)) <= 3.0 * mc.std_error) ++within;
  }
  double worst_rel = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> obs{oracle::uniform(gen, 1, -2, 2)[0], oracle::uniform(gen, 1, -2, 2)[0]};
    std::vector<Vector> observed{Vector::Constant(1, obs[0]), Vector::Constant(1, obs[1])};
    const double mu = oracle::uniform(gen, 1, -2, 2)[0], sd = oracle::uniform(gen, 1, 0.2, 2)[0];
    const bds::PosteriorEstimate post{Vector::Constant(1, mu), Vector::Constant(1, sd * sd)};
    const auto mc = bds::diversity_value_mc(post, observed, bds::FeatureMetric::euclidean(),
                                            bds::AcquisitionConfig{100000, 0.0, 500u + rep});
    const double exact = oracle::expected_min_distance_1d(mu, sd, obs);
    worst_rel = std::max(worst_rel, std::abs(mc.value - exact) / exact);
  }
  verdict(3, within == 100 && worst_rel <= 0.02,
          fmt("%g/100 within 3 SE at 1e4 draws; worst relative error %.2f%% at 1e5 draws", within, 100 * worst_rel));
}

void entropy_argmax() {
  auto gen = bds::rng::stream(1004, Tag::kTest, 0);
  int identical = 0;
  for (int state = 0; state < 10; ++state) {
    bds::GpModel gp(bds::BoxBounds::unit(2), Vector::Zero(1), Vector::Ones(1),
                    {oracle::uniform(gen, 1, 0.5, 2)[0], oracle::uniform(gen, 2, 1, 10)}, 0.05);
    for (int i = 0; i < 3 + state; ++i) gp.add_observation(oracle::uniform(gen, 2), oracle::uniform(gen, 1));
    std::vector<double> s, h;
    for (int i = 0; i < 1000; ++i) {
      const Vector x((Vector(2) << (i % 40) / 39.0, (i / 40) / 24.0).finished());
      s.push_back(bds::exploration_value(gp.posterior(x)));
      h.push_back(0.5 * std::log(2 * M_PI * M_E * s.back() * s.back()));
    }
    const auto ties = [](const std::vector<double>& v) {
      const double best = *std::max_element(v.begin(), v.end());
      std::set<std::size_t> out;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] == best) out.insert(i);
      return out;
    };
    if (ties(s) == ties(h)) ++identical;
  }
  verdict(4, identical == 10, fmt("argmax sets identical on %g/10 GP states", identical));
}

void schedule() {
  std::string got;
  for (std::size_t t = 0; t < 12; ++t) got += bds::phase_for_step(t, 3, 3) == bds::Phase::kExplore ? 'E' : 'O';
  verdict(5, got == "EEEOOOEEEOOO", "phases t=0..11: " + got);
}

void curriculum_numbers() {
  namespace cur = bds::curriculum;
  const double a = cur::control_frequency(0.5, cur::TaskKind::kHighJump);
  const double b = cur::offset_penalty_coefficient(0.5, cur::TaskKind::kHighJump);
  const double c = cur::control_frequency(1.0, cur::TaskKind::kHighJump);
  const double d = cur::offset_penalty_coefficient(1.0, cur::TaskKind::kHighJump);
  const double e = cur::control_frequency(0.5, cur::TaskKind::kObstacleJump);
  const double f = cur::offset_penalty_coefficient(0.5, cur::TaskKind::kObstacleJump);
  const bool ok = a == 10 && b == 48 && c == 30 && d == 15 && e == 20 && f == 31.5;
  verdict(6, ok,
          fmt("high jump 0.5 m -> (%g, %g); ", a, b) + fmt("1.0 m -> (%g, %g); ", c, d) +
              fmt("obstacle 0.5 m -> (%g, %g)", e, f));
}

void reward_formulas() {
  namespace rw = bds::rewards;
  const rw::NoveltyConfig cfg{M_PI / 2, bds::FeatureMetric::angular(), {Vector::Zero(1)}};
  const double lo = rw::novelty_reward(Vector::Zero(1), cfg);
  const double hi = rw::novelty_reward(Vector::Constant(1, M_PI), cfg);
  const double nat = rw::naturalness_reward(24.0, {48.0});
  const double task = rw::task_reward(true, 50.0, false);
  const bool ok = lo == 0.01 && hi == 1.0 && nat == 0.75 && std::abs(task - 0.7 * std::exp(-1.0)) <= 1e-12;
  verdict(7, ok, fmt("novelty clip [%g, %g]; naturalness(c/2) = %g; ", lo, hi, nat) +
                     fmt("task(complete, 50, unsafe) - 0.7/e = %.1e", task - 0.7 * std::exp(-1.0)));
}

void optimizer_sanity() {
  const bds::BoxBounds box(Vector::Constant(2, -2), Vector::Constant(2, 2));
  const double grid = oracle::grid_max_2d(oracle::bumps2d, box, 1000);
  bds::DirectOptions opts;
  opts.budget = {2000, 100000, 0.0};
  const auto r = bds::direct_maximize(oracle::bumps2d, box, opts);
  auto gen = bds::rng::stream(1008, Tag::kTest, 0);
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const bds::BoxBounds cube(Vector::Constant(3, -2), Vector::Constant(3, 2));
    const Vector c = oracle::uniform(gen, 3, -1.5, 1.5);
    const auto best = bds::lbfgs_maximize([&](const Vector& x) { return -(x - c).squaredNorm(); },
                                          [&](const Vector& x) -> Vector { return -2.0 * (x - c); }, cube, {});
    worst = std::max(worst, (best.x - c).norm());
  }
  verdict(8, r.value >= 0.99 * grid && worst <= 1e-5,
          fmt("DIRECT %.6f vs grid %.6f at %g evals; ", r.value, grid, static_cast<double>(r.evaluations)) +
              fmt("L-BFGS worst |x* - c| = %.1e", worst));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
  files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    if (slurp(entry.path()) != slurp(b / entry.path().filename())) return false;
  }
  return files > 0;
}

/// Runs the shipped CLI twice with the default configuration; the first
/// report feeds criterion 9 and the pair feeds criterion 10.
void comparison_and_determinism() {
  const fs::path dir = fs::temp_directory_path() / "bds_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto run = [&](const std::string& tag) {
    const std::string cmd = "'" BDS_CLI_PATH "' compare --seed 0 --seeds 20 --budgets 10 --out '" +
                            (dir / (tag + ".json")).string() + "' --trace-dir '" + (dir / tag).string() +
                            "' > '" + (dir / (tag + ".log")).string() + "' 2>&1";
    return std::system(cmd.c_str());
  };
  const auto start = Clock::now();
  const int first = run("a");
  const double t = seconds_since(start);
  if (first != 0) {
    verdict(9, false, "compare exited with status " + std::to_string(first));
  } else {
    const auto report = bds::read_report(dir / "a.json");
    const auto* b = report.find("bds", 10);
    const auto* r = report.find("random", 10);
    const bool ok = b && r && b->completed == 20 && r->completed == 20 && b->mean > r->mean && b->mean >= 4.0 &&
                    t < 300.0;
    verdict(9, ok,
            fmt("mean distinct modes BDS %.2f vs random %.2f over 20 seeds", b ? b->mean : -1, r ? r->mean : -1) +
                fmt(" (%.1f s)", t));
  }
  const int second = run("b");
  std::size_t files = 0;
  const bool ok = first == 0 && second == 0 && slurp(dir / "a.json") == slurp(dir / "b.json") &&
                  slurp(dir / "a.csv") == slurp(dir / "b.csv") && same_tree(dir / "a", dir / "b", files);
  verdict(10, ok, "report, CSV and " + std::to_string(files) + " traces byte-identical across two compare runs");
}

}  // namespace

int main() {
  gp_correctness();
  kernel_identity();
  acquisition_agreement();
  entropy_argmax();
  schedule();
  curriculum_numbers();
  reward_formulas();
  optimizer_sanity();
  comparison_and_determinism();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
