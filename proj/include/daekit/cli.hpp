#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace daekit {

// Exit codes: 0 success, 1 a certificate verdict of HypothesesViolated, 2 usage or numerical error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace daekit
