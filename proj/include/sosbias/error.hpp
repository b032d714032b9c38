/*
 * Copyright 2026 The sosbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SOSBIAS_ERROR_HPP_
#define SOSBIAS_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace sosbias {

// Base of every error thrown by the toolkit. The CLI maps these to a
// non-zero exit status with the message as diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `where` is "path:line" or a record description.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where + ": " + what) {}
};

// A data invariant was violated (duplicate term, tampered pair, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

// A pair whose two sentences share no token cannot be scored.
class DegeneratePairError : public Error {
 public:
  using Error::Error;
};

// Failure reported by a scoring / representation backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

// A rate, AUC or statistic that is mathematically undefined on the input.
class UndefinedStatisticError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public Error {
 public:
  RankDeficientError(int requested, int achieved)
      : Error("bias subspace is rank deficient: requested K=" +
              std::to_string(requested) + ", achieved rank " +
              std::to_string(achieved)),
        requested_(requested),
        achieved_(achieved) {}

  int requested() const { return requested_; }
  int achieved() const { return achieved_; }

 private:
  int requested_;
  int achieved_;
};

}  // namespace sosbias

#endif  // SOSBIAS_ERROR_HPP_
