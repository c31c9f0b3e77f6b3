#include "hill4bp/io.hpp"

#include <cstdio>
#include <fstream>

#include "hill4bp/errors.hpp"

namespace hill4bp::io {

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path &path, const std::string &body)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << body;
}

void write_json(const std::filesystem::path &path, const json &j)
{
    write_text(path, j.dump(2) + "\n");
}

} // namespace hill4bp::io
