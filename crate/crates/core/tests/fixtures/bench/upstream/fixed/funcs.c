#include "file.h"

protected int
file_check_mem(struct magic_set *ms, unsigned int level)
{
	size_t len;

	if (level >= ms->c.len) {
		len = (ms->c.len = 20 + level) * sizeof(*ms->c.li);
		ms->c.li = CAST(struct level_info *, (ms->c.li == NULL) ?
		    malloc(len) :
		    realloc(ms->c.li, len));
		if (ms->c.li == NULL) {
			file_oomem(ms, len);
			return -1;
		}
	}
	ms->c.li[level].got_match = 0;
#ifdef ENABLE_CONDITIONALS
	ms->c.li[level].last_match = 0;
	ms->c.li[level].last_cond = COND_NONE;
#endif /* ENABLE_CONDITIONALS */
	return 0;
}

static int
parse_tlv(const unsigned char *buf, size_t buflen, struct tlv *out)
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

int
archive_extract_entry(const char *dest_dir, const char *entry_name, FILE *src)
{
	char path[PATH_MAX];
	FILE *dst;
	int n;

	if (entry_name[0] == '/' || strstr(entry_name, "..") != NULL)
		return -1;
	n = snprintf(path, sizeof(path), "%s/%s", dest_dir, entry_name);
	if (n < 0 || (size_t)n >= sizeof(path))
		return -1;
	dst = fopen(path, "wb");
	if (dst == NULL)
		return -1;
	copy_stream(src, dst);
	fclose(dst);
	return 0;
}
