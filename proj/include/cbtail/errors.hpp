// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <stdexcept>
#include <string>

namespace cbtail {

/// Base of every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CBTAIL_DEFINE_ERROR(Name)        \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// stain_norm
CBTAIL_DEFINE_ERROR(DegenerateStains);
CBTAIL_DEFINE_ERROR(TooFewPixels);
CBTAIL_DEFINE_ERROR(SingularStainMatrix);
CBTAIL_DEFINE_ERROR(InvalidArgument);

// sampling / losses / model / trainer
CBTAIL_DEFINE_ERROR(IndexOutOfRange);
CBTAIL_DEFINE_ERROR(EmptyDataset);
CBTAIL_DEFINE_ERROR(DimensionMismatch);
CBTAIL_DEFINE_ERROR(InvalidSchedule);
CBTAIL_DEFINE_ERROR(ShapeMismatch);
CBTAIL_DEFINE_ERROR(MissingStage1);

// inference
CBTAIL_DEFINE_ERROR(UnsupportedK);
CBTAIL_DEFINE_ERROR(ModelDimensionMismatch);

// metrics
CBTAIL_DEFINE_ERROR(LengthMismatch);
CBTAIL_DEFINE_ERROR(LabelOutOfRange);
CBTAIL_DEFINE_ERROR(EmptyMatrix);

// dataio
CBTAIL_DEFINE_ERROR(ParseError);
CBTAIL_DEFINE_ERROR(UnknownLabel);
CBTAIL_DEFINE_ERROR(MissingFile);
CBTAIL_DEFINE_ERROR(IoError);

#undef CBTAIL_DEFINE_ERROR

}  // namespace cbtail
