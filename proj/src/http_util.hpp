#pragma once

#include <string>
#include <string_view>

#include "chainview/error.hpp"

namespace chainview::detail {

struct UrlParts {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/..." (never empty)
};

inline UrlParts split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(Errc::ParseError, "URL lacks scheme: " + std::string(url));
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  UrlParts parts;
  if (path_begin == std::string_view::npos) {
    parts.scheme_host_port = std::string(url);
    parts.path = "/";
  } else {
    parts.scheme_host_port = std::string(url.substr(0, path_begin));
    parts.path = std::string(url.substr(path_begin));
  }
  return parts;
}

}  // namespace chainview::detail
