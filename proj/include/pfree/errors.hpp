#ifndef PFREE_ERRORS_HPP
#define PFREE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pfree {

/// Malformed input data (files, matrix records).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configured work bound would be exceeded.
class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pfree

#endif
