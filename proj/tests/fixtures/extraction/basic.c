#include <stdlib.h>
#include <string.h>

#define MAX_LEN 32
#define ALLOC_OBJ(type) ((type *)calloc(1, sizeof(type)))
#define LOG_MSG(fmt, ...) \
    log_write(__FILE__, __LINE__, fmt, __VA_ARGS__)

typedef struct buffer *buffer_ptr;
typedef unsigned long buf_size;
typedef buffer_ptr buffer_handle;
typedef int (*drain_fn)(void *ctx);
typedef struct node node_t, *node_ptr;

struct buffer {
    char *data;
    buf_size len;
};

static buffer_ptr buffer_new(buf_size len)
{
    buffer_ptr b = ALLOC_OBJ(struct buffer);
    if (!b)
        return NULL;
    b->data = malloc(len);
    if (!b->data) {
        free(b);
        return NULL;
    }
    b->len = len;
    return b;
}

void buffer_release(buffer_ptr b)
{
    if (!b)
        return;
    free(b->data);
    free(b);
}

int checksum(const char *data, buf_size len)
{
    int sum = 0;
    for (buf_size i = 0; i < len; i++)
        sum += data[i];
    return sum;
}

static int self_test_roundtrip(void)
{
    buffer_ptr b = buffer_new(MAX_LEN);
    int ok = b != NULL;
    buffer_release(b);
    return ok;
}

int count_items(int n, int m)
{
    return n * m;
}

int main(int argc, char **argv)
{
    (void)argv;
    if (!self_test_roundtrip())
        return 1;
    return argc > MAX_LEN;
}
