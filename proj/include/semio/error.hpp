// Copyright (C) 2026 The semio Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace semio {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SEMIO_DEFINE_ERROR(Name)         \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

SEMIO_DEFINE_ERROR(CatalogError);
SEMIO_DEFINE_ERROR(NotFoundError);
SEMIO_DEFINE_ERROR(ValidationError);
SEMIO_DEFINE_ERROR(IoError);
SEMIO_DEFINE_ERROR(ParameterError);
SEMIO_DEFINE_ERROR(EnhancementError);
SEMIO_DEFINE_ERROR(BackendError);
SEMIO_DEFINE_ERROR(ProtocolError);
SEMIO_DEFINE_ERROR(AggregationError);
SEMIO_DEFINE_ERROR(EvaluationError);
SEMIO_DEFINE_ERROR(CalibrationError);
SEMIO_DEFINE_ERROR(LeakageError);
SEMIO_DEFINE_ERROR(ComparisonError);
SEMIO_DEFINE_ERROR(SummaryError);
SEMIO_DEFINE_ERROR(GenerationError);
SEMIO_DEFINE_ERROR(FixtureError);
SEMIO_DEFINE_ERROR(ReportError);
SEMIO_DEFINE_ERROR(ConfigError);

#undef SEMIO_DEFINE_ERROR

// Raised by backend transports for failures worth retrying (connection
// refused, timeouts, 5xx). Converted to BackendError once retries run out.
class TransientError : public Error {
 public:
  using Error::Error;
};

}  // namespace semio
