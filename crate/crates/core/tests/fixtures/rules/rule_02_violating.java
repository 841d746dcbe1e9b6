FileChannel channel = output.getChannel();
while (buffer.hasRemaining()) {
    channel.write(buffer);
}
