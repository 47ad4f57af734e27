#pragma once

#include <iosfwd>

namespace cogweb::cli {

// Exit codes: 0 success, 1 partial failure (some records or tasks failed),
// 2 configuration error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cogweb::cli
