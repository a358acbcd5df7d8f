#pragma once

#include <stdexcept>
#include <string>

namespace provdet {

// Base class for all toolkit errors. Subclasses are thrown where the
// corresponding contract is violated so callers can catch selectively.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PROVDET_ERROR(Name)                         \
    class Name : public Error {                     \
    public:                                         \
        using Error::Error;                         \
    }

PROVDET_ERROR(MalformedRecord);
PROVDET_ERROR(UnknownType);
PROVDET_ERROR(NegativeTimestamp);
PROVDET_ERROR(ConflictingType);
PROVDET_ERROR(EmptyCorpus);
PROVDET_ERROR(ShapeMismatch);
PROVDET_ERROR(DimensionMismatch);
PROVDET_ERROR(EmptyBank);
PROVDET_ERROR(EmptyBenign);
PROVDET_ERROR(DegenerateGraph);
PROVDET_ERROR(MissingVerdict);
PROVDET_ERROR(NoCampaigns);
PROVDET_ERROR(UnknownScenario);
PROVDET_ERROR(ConfigError);
PROVDET_ERROR(IoError);

#undef PROVDET_ERROR

}  // namespace provdet
