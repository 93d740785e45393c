#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "annofuse/image.hpp"
#include "annofuse/rng.hpp"
#include "annofuse/types.hpp"

using namespace annofuse;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("annofuse_img_" + name);
}

ImageBuffer random_image(Rng& rng, int w, int h, int c) {
    ImageBuffer img = ImageBuffer::make(w, h, c);
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return img;
}

}  // namespace

TEST_CASE("ppm/pgm: bit-exact round trip") {
    Rng rng(11);
    const auto ppm = temp_file("rt.ppm");
    const auto pgm = temp_file("rt.pgm");
    for (int trial = 0; trial < 5; ++trial) {
        const auto rgb = random_image(rng, 17 + trial, 9 + trial, 3);
        write_ppm(rgb, ppm);
        CHECK(read_ppm(ppm) == rgb);
        CHECK(read_image(ppm) == rgb);  // magic-byte dispatch

        const auto gray = random_image(rng, 13 + trial, 21 + trial, 1);
        write_pgm(gray, pgm);
        CHECK(read_pgm(pgm) == gray);
        CHECK(read_image(pgm) == gray);
    }
    fs::remove(ppm);
    fs::remove(pgm);
}

TEST_CASE("ppm: written bytes are canonical") {
    ImageBuffer img = ImageBuffer::make(2, 1, 3);
    img.pixels = {1, 2, 3, 250, 251, 252};
    const auto path = temp_file("canon.ppm");
    write_ppm(img, path);
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(bytes == std::string("P6\n2 1\n255\n") + "\x01\x02\x03\xfa\xfb\xfc");
    fs::remove(path);
}

TEST_CASE("pnm: header comments are skipped") {
    const auto path = temp_file("comment.pgm");
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# a comment\n2 2\n# another\n255\n";
    out.write("\x00\x40\x80\xff", 4);
    out.close();
    const auto img = read_pgm(path);
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.at(1, 1, 0) == 0xff);
    fs::remove(path);
}

TEST_CASE("pnm: malformed files are rejected") {
    const auto path = temp_file("bad.ppm");
    std::ofstream(path, std::ios::binary) << "P6\n4 4\n255\nxx";  // truncated
    CHECK_THROWS_AS(read_ppm(path), InputError);
    std::ofstream(path, std::ios::binary) << "P7\n1 1\n255\n";
    CHECK_THROWS_AS(read_ppm(path), InputError);
    fs::remove(path);
    CHECK_THROWS_AS(read_ppm(temp_file("missing.ppm")), InputError);
}

TEST_CASE("png: rgb and gray round trip") {
    Rng rng(12);
    const auto path = temp_file("rt.png");
    const auto rgb = random_image(rng, 33, 21, 3);
    write_png(rgb, path);
    CHECK(read_png(path) == rgb);
    CHECK(read_image(path) == rgb);

    const auto gray = random_image(rng, 8, 40, 1);
    write_png(gray, path);
    CHECK(read_png(path) == gray);
    fs::remove(path);
}

TEST_CASE("write_image dispatches on extension") {
    ImageBuffer img = ImageBuffer::make(4, 4, 3, 128);
    const auto bad = temp_file("img.bmp");
    CHECK_THROWS_AS(write_image(img, bad), InputError);
}
