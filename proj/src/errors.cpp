#include "hiercdm/errors.hpp"

namespace hiercdm {

NestingError::NestingError(double null_loglik, double alt_loglik)
    : Error("null fit log-likelihood " + std::to_string(null_loglik) + " exceeds alternative fit " +
            std::to_string(alt_loglik)),
      null_loglik_(null_loglik),
      alt_loglik_(alt_loglik) {}

ParseError::ParseError(const std::string& source, int line, int column, const std::string& what)
    : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

}  // namespace hiercdm
