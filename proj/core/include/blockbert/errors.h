/* Copyright 2026 The BlockBERT-cpp Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef BLOCKBERT_CORE_ERRORS_H_
#define BLOCKBERT_CORE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace blockbert {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A precondition on a scalar argument was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A softmax row had no finite entry.
class DegenerateRowError : public Error {
 public:
  using Error::Error;
};

class SingularDesignError : public Error {
 public:
  using Error::Error;
};

// The finite-difference oracle saw a non-finite function value.
class OracleError : public Error {
 public:
  using Error::Error;
};

// Blockwise attention requires the sequence length to be a multiple of the
// block count; callers pad first.
class PaddingRequiredError : public Error {
 public:
  using Error::Error;
};

// Non-finite activations, losses or gradients.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ProfilingError : public Error {
 public:
  using Error::Error;
};

// Raised by the allocation tracker when a byte budget is exceeded.
class OutOfMemoryError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (checkpoints, masks, vocab files).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_ERRORS_H_
