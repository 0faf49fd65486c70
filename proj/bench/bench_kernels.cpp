// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "pkiaudit/caa.hpp"
#include "pkiaudit/pipeline.hpp"

using namespace pkiaudit;

namespace {

std::vector<std::string> issue_values(std::size_t n) {
  static const char* shapes[] = {"letsencrypt.org", "digicert.com; cansignhttpexchanges=yes", ";", "web .com",
                                 "  pki.goog ; accounturi=https://acme.example/acct/1 ; validationmethods=dns-01"};
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(shapes[i % 5]);
  return out;
}

void BM_IssueValuesSerial(benchmark::State& state) {
  auto values = issue_values(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(caa::parse_issue_values_serial(values));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_IssueValuesParallel(benchmark::State& state) {
  auto values = issue_values(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(caa::parse_issue_values_parallel(values, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct Corpus {
  pipeline::Environment env;
  std::vector<pipeline::Target> targets;
};

const Corpus& corpus() {
  static Corpus c = [] {
    const std::filesystem::path dir = std::filesystem::path(PKIAUDIT_FIXTURES) / "corpus";
    pipeline::EnvironmentOptions options;
    options.fixtures = dir;
    Corpus out{pipeline::make_environment(options), {}};
    std::ifstream in(dir / "input.txt");
    std::stringstream text;
    text << in.rdbuf();
    auto prepared = pipeline::prepare_targets(pipeline::parse_input_list(text.str()), *out.env.dns, *out.env.web);
    for (int copy = 0; copy < 4; ++copy)
      out.targets.insert(out.targets.end(), prepared.targets.begin(), prepared.targets.end());
    return out;
  }();
  return c;
}

void BM_AuditSerial(benchmark::State& state) {
  const auto& c = corpus();
  auto ctx = c.env.context();
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::audit_all_serial(c.targets, ctx));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c.targets.size()));
}

void BM_AuditParallel(benchmark::State& state) {
  const auto& c = corpus();
  auto ctx = c.env.context();
  for (auto _ : state)
    benchmark::DoNotOptimize(pipeline::audit_all_parallel(c.targets, ctx, static_cast<int>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c.targets.size()));
}

}  // namespace

BENCHMARK(BM_IssueValuesSerial)->Arg(10000)->Arg(100000);
BENCHMARK(BM_IssueValuesParallel)->Arg(10000)->Arg(100000);
BENCHMARK(BM_AuditSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AuditParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
