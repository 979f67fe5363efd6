// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef RAINGP_ERRORS_HPP
#define RAINGP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace raingp {

// Malformed or inconsistent input data (CSV parse failures, bad headers, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure inside the sampler or linear algebra (singular covariance,
// exhausted slice-shrink budget).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace raingp

#endif
