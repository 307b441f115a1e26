// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tslcd {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument, configuration value or input data. The CLI maps it to exit status 1.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written.
class IoError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A pipeline stage was requested before the stage it depends on produced its artifact.
class PrerequisiteError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Training produced a non-finite loss.
class TrainingDiverged : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

}  // namespace tslcd
