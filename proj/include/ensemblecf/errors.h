/*
 * Copyright 2026 The ensemblecf Authors.
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

#ifndef ENSEMBLECF_ERRORS_H_
#define ENSEMBLECF_ERRORS_H_

#include <stdexcept>
#include <string>

namespace ensemblecf {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed dataset, schema, or instance.
class DataError : public Error {
 public:
  using Error::Error;
};

// The black box failed to answer, or answered outside its contract.
class PredictionError : public Error {
 public:
  using Error::Error;
};

// A serialized model file could not be read.
class ModelParseError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ensemblecf

#endif  // ENSEMBLECF_ERRORS_H_
