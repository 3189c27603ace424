#include "glucosindy/file_io.hpp"

#include "glucosindy/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace glucosindy {

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(fmt::format("cannot write '{}'", tmp.string()));
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out.flush()) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError(fmt::format("error writing '{}'", tmp.string()));
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError(fmt::format("cannot move output into '{}'", path.string()));
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError(fmt::format("error reading '{}'", path.string()));
    return buffer.str();
}

}  // namespace glucosindy
