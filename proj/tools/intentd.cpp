#include <csignal>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>

#include "intentd/app.hpp"

namespace {

sigset_t shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

void wait_for_signal(intentd::rest::RestServer&) {
  const sigset_t set = shutdown_signals();
  int sig = 0;
  sigwait(&set, &sig);
}

// `intentd -` reads one command per line from stdin against a single core.
// Blank lines and lines starting with '#' are skipped.
int run_script(intentd::app::CommandLine& cli) {
  int status = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    std::istringstream words(line);
    std::vector<std::string> args;
    for (std::string w; words >> w;) args.push_back(w);
    if (args.empty() || args.front().starts_with('#')) continue;
    status = std::max(status, cli.execute(args, std::cout, std::cerr));
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (!args.empty() && args.front() == "serve") {
    // Block the shutdown signals before the server thread starts so that only
    // sigwait() sees them.
    const sigset_t set = shutdown_signals();
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
  }

  intentd::app::CommandLine cli(wait_for_signal);
  if (args.size() == 1 && args.front() == "-") return run_script(cli);
  return cli.execute(args, std::cout, std::cerr);
}
