#include "annofuse/image.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include <png.h>

#include "annofuse/types.hpp"

namespace annofuse {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& msg) {
    throw InputError(path.string() + ": " + msg);
}

// PNM token reader: skips whitespace and '#' comments.
int read_pnm_int(std::istream& in, const std::filesystem::path& path) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) fail(path, "malformed PNM header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1'000'000) fail(path, "PNM header value out of range");
        c = in.get();
    }
    if (c != EOF) in.unget();
    return value;
}

ImageBuffer read_pnm(const std::filesystem::path& path, const char* magic, int channels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    char m[2];
    in.read(m, 2);
    if (!in || m[0] != magic[0] || m[1] != magic[1])
        fail(path, std::string("not a ") + magic + " file");
    const int w = read_pnm_int(in, path);
    const int h = read_pnm_int(in, path);
    const int maxval = read_pnm_int(in, path);
    if (maxval != 255) fail(path, "only maxval 255 is supported");
    in.get();  // single whitespace before the raster

    ImageBuffer img = ImageBuffer::make(w, h, channels);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.pixels.size())
        fail(path, "truncated raster data");
    return img;
}

void write_pnm(const ImageBuffer& img, const std::filesystem::path& path, const char* magic,
               int channels) {
    if (img.channels != channels)
        fail(path, std::string(magic) + " requires " + std::to_string(channels) + " channel(s)");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << magic << "\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) fail(path, "write failed");
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

}  // namespace

ImageBuffer ImageBuffer::make(int w, int h, int c, std::uint8_t fill) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
        throw InputError("invalid image dimensions " + std::to_string(w) + "x" +
                         std::to_string(h) + "x" + std::to_string(c));
    ImageBuffer img;
    img.width = w;
    img.height = h;
    img.channels = c;
    img.pixels.assign(static_cast<std::size_t>(w) * h * c, fill);
    return img;
}

ImageBuffer read_ppm(const std::filesystem::path& path) { return read_pnm(path, "P6", 3); }
void write_ppm(const ImageBuffer& img, const std::filesystem::path& path) {
    write_pnm(img, path, "P6", 3);
}

ImageBuffer read_pgm(const std::filesystem::path& path) { return read_pnm(path, "P5", 1); }
void write_pgm(const ImageBuffer& img, const std::filesystem::path& path) {
    write_pnm(img, path, "P5", 1);
}

ImageBuffer read_png(const std::filesystem::path& path) {
    PngReadCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) fail(path, "cannot open");
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw std::runtime_error("png_create_read_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw std::runtime_error("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(ctx.png))) fail(path, "PNG decode error");

    png_init_io(ctx.png, ctx.fp);
    png_read_info(ctx.png, ctx.info);

    // Normalize to 8-bit gray or RGB.
    png_set_strip_16(ctx.png);
    png_set_packing(ctx.png);
    const png_byte color = png_get_color_type(ctx.png, ctx.info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(ctx.png, ctx.info) < 8)
        png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    const int w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
    const int h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
    const int ch = static_cast<int>(png_get_channels(ctx.png, ctx.info));
    if (ch != 1 && ch != 3) fail(path, "unsupported channel count " + std::to_string(ch));

    ImageBuffer img = ImageBuffer::make(w, h, ch);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * w * ch;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
    return img;
}

void write_png(const ImageBuffer& img, const std::filesystem::path& path) {
    PngWriteCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "wb");
    if (!ctx.fp) fail(path, "cannot open for writing");
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw std::runtime_error("png_create_write_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw std::runtime_error("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(ctx.png))) fail(path, "PNG encode error");

    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    std::vector<png_const_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels;
    png_write_rows(ctx.png, const_cast<png_bytepp>(rows.data()),
                   static_cast<png_uint_32>(rows.size()));
    png_write_end(ctx.png, ctx.info);
}

ImageBuffer read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    in.close();
    if (magic[0] == 'P' && magic[1] == '6') return read_ppm(path);
    if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
    if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') return read_png(path);
    fail(path, "unrecognized image format (expected PPM, PGM or PNG)");
}

void write_image(const ImageBuffer& img, const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".ppm") return write_ppm(img, path);
    if (ext == ".pgm") return write_pgm(img, path);
    if (ext == ".png") return write_png(img, path);
    fail(path, "unsupported output extension \"" + ext + "\"");
}

}  // namespace annofuse
