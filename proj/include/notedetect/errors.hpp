/*
 * Copyright 2026 The notedetect Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace notedetect {

// Base of every error thrown by the toolkit. The subclasses map onto the
// CLI exit-code classes (see cli.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (XML, TSV, CSV). Carries the 1-based line if known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        message_(what),
        line_(line) {}
  int line() const { return line_; }
  // The message without the line suffix.
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  int line_;
};

// Label text outside the fixed denomination set.
class LabelError : public Error {
 public:
  using Error::Error;
};

// A record or box violating its invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Annotation and image file disagree (e.g. dimensions).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure: missing file, unreadable directory, write error.
class IoError : public Error {
 public:
  using Error::Error;
};

// Dataset loading failure, e.g. an annotation without its image file.
class LoadError : public IoError {
 public:
  using IoError::IoError;
};

// Caller passed an argument outside its documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Affine transform with |det| below the invertibility floor.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

// Augmented output would collide with an existing record id.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Bytes that do not decode to an image.
class ImageDecodeError : public Error {
 public:
  using Error::Error;
};

// Raised by detector backends; the message carries backend diagnostics.
class InferenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace notedetect
