#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kdbm/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  kdbm::AcceptanceOptions opts;
  std::vector<int> only;
  app.add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", opts.seed, "Master seed");
  app.add_option("--only", only, "Run only these criteria (1..11)")->check(CLI::Range(1, 11))->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  const auto results = kdbm::run_acceptance(opts, only, [&](const kdbm::CriterionResult& r) {
    std::cout << kdbm::format_result(r) << std::flush;
    failed += !r.pass;
  });
  std::cout << "\n" << results.size() - failed << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
