#include <stdio.h>
#include <string.h>
#include "extract.h"

int
archive_extract_entry(const char *dest_dir, const char *entry_name, FILE *src)
{
	char path[PATH_MAX];
	FILE *dst;
	int n;

	// build the destination path
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

int
unpack_member(const char *dest_dir, const char *name, FILE *src)
{
	char path[PATH_MAX];
	FILE *dst;
	int n;

	n = snprintf(path, sizeof(path), "%s/%s", dest_dir, name);
	if (n < 0 || (size_t)n >= sizeof(path))
		return -1;
	dst = fopen(path, "wb");
	if (dst == NULL)
		return -1;
	copy_stream(src, dst);
	fclose(dst);
	return 0;
}

int
archive_list_entry(const char *dest_dir, const char *name, FILE *log)
{
	struct stat st;
	int n;

	if (stat(dest_dir, &st) != 0 || !S_ISDIR(st.st_mode))
		return -1;
	n = fprintf(log, "%s: %s\n", dest_dir, name);
	return n < 0 ? -1 : 0;
}

int
write_entry_file(const char *dest_dir, const char *entry_name, FILE *src, int verbose)
{
	char path[PATH_MAX];
	FILE *dst;

	if (snprintf(path, sizeof(path), "%s/%s", dest_dir, entry_name) >= (int)sizeof(path))
		return -1;
	if (verbose)
		fprintf(stderr, "x %s\n", path);
	if ((dst = fopen(path, "wb")) == NULL)
		return -1;
	copy_stream(src, dst);
	fclose(dst);
	return 0;
}

int
safe_extract_entry(const char *dest_dir, const char *entry_name, FILE *src)
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
