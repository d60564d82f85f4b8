#include "selfloop/errors.hpp"

namespace selfloop {

namespace {

std::string describe(const std::string& phase, const std::string& term, int iteration) {
    std::string msg = "non-finite value in phase " + phase + ", term " + term;
    if (iteration >= 0) msg += ", iteration " + std::to_string(iteration);
    return msg;
}

}  // namespace

NumericFailure::NumericFailure(std::string phase, std::string term, int iteration)
    : std::runtime_error(describe(phase, term, iteration)),
      phase_(std::move(phase)),
      term_(std::move(term)),
      iteration_(iteration) {}

}  // namespace selfloop
