#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vnode {

enum class Errc {
  invalid_argument,
  // lang-registry
  unsupported_language,
  // identity
  invalid_username,
  username_taken,
  weak_password,
  invalid_credentials,
  unauthorized,
  unknown_user,
  self_follow,
  bad_key_length,
  // ledger
  payload_too_large,
  storage_failure,
  range_out_of_bounds,
  not_found,
  // engine
  no_transcript_chunk,
  engine_unavailable,
  // media
  not_riff,
  unsupported_encoding,
  too_long,
  too_large,
  truncated_chunk,
  // posts-timeline
  unknown_post,
  bad_cursor,
  // storage
  schema_mismatch,
  unwritable,
  corrupt_blob,
  // service
  config_error,
  bind_failure,
};

/// Stable snake_case identifier used in the HTTP error envelope.
std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace vnode
