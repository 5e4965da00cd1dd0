#include "vnode/error.hpp"

namespace vnode {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::unsupported_language: return "unsupported_language";
    case Errc::invalid_username: return "invalid_username";
    case Errc::username_taken: return "username_taken";
    case Errc::weak_password: return "weak_password";
    case Errc::invalid_credentials: return "invalid_credentials";
    case Errc::unauthorized: return "unauthorized";
    case Errc::unknown_user: return "unknown_user";
    case Errc::self_follow: return "self_follow";
    case Errc::bad_key_length: return "bad_key_length";
    case Errc::payload_too_large: return "payload_too_large";
    case Errc::storage_failure: return "storage_failure";
    case Errc::range_out_of_bounds: return "range_out_of_bounds";
    case Errc::not_found: return "not_found";
    case Errc::no_transcript_chunk: return "no_transcript_chunk";
    case Errc::engine_unavailable: return "engine_unavailable";
    case Errc::not_riff: return "not_riff";
    case Errc::unsupported_encoding: return "unsupported_encoding";
    case Errc::too_long: return "too_long";
    case Errc::too_large: return "too_large";
    case Errc::truncated_chunk: return "truncated_chunk";
    case Errc::unknown_post: return "unknown_post";
    case Errc::bad_cursor: return "bad_cursor";
    case Errc::schema_mismatch: return "schema_mismatch";
    case Errc::unwritable: return "unwritable";
    case Errc::corrupt_blob: return "corrupt_blob";
    case Errc::config_error: return "config_error";
    case Errc::bind_failure: return "bind_failure";
  }
  return "unknown";
}

}  // namespace vnode
