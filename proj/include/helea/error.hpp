#pragma once

#include <stdexcept>
#include <string>

namespace helea {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define HELEA_DEFINE_ERROR(Name)            \
    class Name : public Error {             \
    public:                                 \
        using Error::Error;                 \
    }

HELEA_DEFINE_ERROR(InvalidArgument);
HELEA_DEFINE_ERROR(MalformedRecord);
HELEA_DEFINE_ERROR(DimensionMismatch);
HELEA_DEFINE_ERROR(DuplicateId);
HELEA_DEFINE_ERROR(NonUnitVector);
HELEA_DEFINE_ERROR(EmptyPositives);
HELEA_DEFINE_ERROR(DivergenceDetected);
HELEA_DEFINE_ERROR(ProviderError);
HELEA_DEFINE_ERROR(TransportError);
HELEA_DEFINE_ERROR(RangeError);
HELEA_DEFINE_ERROR(SingleClassInput);
HELEA_DEFINE_ERROR(LengthMismatch);
HELEA_DEFINE_ERROR(MissingGold);
HELEA_DEFINE_ERROR(IoError);
HELEA_DEFINE_ERROR(ConfigError);

#undef HELEA_DEFINE_ERROR

} // namespace helea
