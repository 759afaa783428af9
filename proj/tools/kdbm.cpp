#include <iostream>

#include "kdbm/cli.hpp"

int main(int argc, char** argv) {
  kdbm::ParsedCommandLine parsed;
  try {
    parsed = kdbm::parse_config(argc, argv);
  } catch (const kdbm::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun with --help for the list of options\n";
    return kdbm::kExitUsage;
  }
  if (parsed.help) {
    std::cout << *parsed.help;
    return kdbm::kExitOk;
  }
  return kdbm::run_experiment(parsed.spec);
}
