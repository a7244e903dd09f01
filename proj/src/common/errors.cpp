#include "surveysim/common/errors.hpp"

#include "surveysim/common/text.hpp"

namespace surveysim {

LabelMappingError::LabelMappingError(const std::string &context, std::vector<std::string> unmatched)
    : Error(context + ": unmatched option labels [" + text::join(unmatched, ", ") + "]"),
      unmatched_{std::move(unmatched)} {}

} // namespace surveysim
