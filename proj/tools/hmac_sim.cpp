#include <iostream>

#include "hmac/experiment.hpp"

int main(int argc, char** argv) {
  hmac::ExperimentPlan plan;
  try {
    plan = hmac::parse_args(argc, argv);
  } catch (const hmac::HelpRequested& help) {
    std::cout << help.what();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\nrun with --help for options\n";
    return 2;
  }
  try {
    return hmac::execute(plan, std::cout).exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
