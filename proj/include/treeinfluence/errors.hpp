#pragma once

#include <stdexcept>
#include <string>

namespace treeinf {

// Raised for unreadable/unwritable files; everything else uses the
// standard logic_error/runtime_error hierarchy.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace treeinf
