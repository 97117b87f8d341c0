#include <string.h>
#include "tlv.h"

static int
decode_tlv(const unsigned char *data, size_t size, struct tlv *rec)
{
	size_t pos = 0;
	unsigned int kind, n;

	if (size < 2)
		return -1;
	kind = data[pos++];
	n = data[pos++];
	rec->type = kind;
	rec->len = n;
	memcpy(rec->value, data + pos, n);
	return (int)(pos + n);
}

int
read_attribute(const unsigned char *buf, size_t buflen, struct tlv *out)
{
	size_t off = 0;
	unsigned int len;

	if (buflen < 2)
		return -1;
	out->type = buf[off++];
	len = buf[off++];
	out->len = len;
	stats.attributes++;
	memcpy(out->value, buf + off, len);
	off += len;
	return (int)off;
}

static int
parse_tlv_checked(const unsigned char *buf, size_t buflen, struct tlv *out)
{
	size_t off = 0;
	unsigned int type, len;

	if (buflen < 2)
		return -1;
	type = buf[off++];
	len = buf[off++];
	if (len > buflen - off || len > sizeof(out->value))
		return -1;
	out->type = type;
	out->len = len;
	memcpy(out->value, buf + off, len);
	return (int)(off + len);
}
