#pragma once

#include <stdexcept>
#include <string>

namespace wavlink {

// Error categories map 1:1 onto CLI exit codes (validation=1, numeric=2, io=3).

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Zero-norm embedding: training aborts the step, evaluation reports the item.
struct DegenerateEmbeddingError : NumericError {
    explicit DegenerateEmbeddingError(const std::string& msg) : NumericError(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace wavlink
